import json
from importlib import resources
from pathlib import Path

import pytest

MINICORPUS = Path(str(resources.files("divsumm").joinpath("data/minicorpus")))
DATA = MINICORPUS.parent


@pytest.fixture
def minicorpus():
    return MINICORPUS


@pytest.fixture
def riverton():
    return MINICORPUS / "riverton_toll"


@pytest.fixture
def make_topic(tmp_path):
    """Write a topic directory from {filename: text} dicts."""

    def _make(articles, refs=None, name="topic", scores=None):
        root = tmp_path / name
        (root / "articles").mkdir(parents=True)
        for fname, text in articles.items():
            (root / "articles" / fname).write_text(text, encoding="utf-8")
        if refs is not None:
            (root / "refs").mkdir()
            for fname, text in refs.items():
                (root / "refs" / fname).write_text(text, encoding="utf-8")
        if scores is not None:
            with open(root / "arg_scores.jsonl", "w", encoding="utf-8") as fh:
                for key, score in scores.items():
                    fh.write(json.dumps({"key": key, "score": score}) + "\n")
        return root

    return _make


@pytest.fixture
def fake_service():
    """Local HTTP server; ``handler(path, body) -> (status, payload)`` decides each reply."""
    import threading
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    state = {"handler": None, "requests": []}

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            state["requests"].append((self.path, body))
            status, payload = state["handler"](self.path, body)
            data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()

    class Service:
        url = f"http://127.0.0.1:{server.server_address[1]}"
        requests = state["requests"]

        def reply_with(self, handler):
            state["handler"] = handler

    yield Service()
    server.shutdown()
    server.server_close()
