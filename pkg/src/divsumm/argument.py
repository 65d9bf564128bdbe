"""Selection stage: split sentences into argumentative and non-argumentative."""

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .embed import post_json, remote_timeout
from .errors import AlignmentError, MissingScore, ParseError, RemoteError

LEXICON_VERSION = 1


@dataclass(frozen=True)
class ArgLabel:
    sentence_global_index: int
    score: float
    is_argument: bool


@dataclass(frozen=True)
class ArgumentBackendConfig:
    kind: str = "lexicon"
    threshold: float = 0.5
    path: str | None = None
    endpoint: str | None = None
    timeout_s: float | None = None

    def __post_init__(self):
        if self.kind not in ("lexicon", "score_file", "remote"):
            raise ValueError(f"unknown argument backend {self.kind!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.kind == "score_file" and self.path is None:
            raise ValueError("score_file backend requires 'path'")
        if self.kind == "remote" and self.endpoint is None:
            raise ValueError("remote backend requires 'endpoint'")


def parse_lexicon(text):
    markers = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            markers.append(line.lower())
    return tuple(markers)


@lru_cache(maxsize=None)
def default_lexicon():
    text = resources.files("divsumm").joinpath("data/argument_lexicon.txt").read_text("utf-8")
    return parse_lexicon(text)


@lru_cache(maxsize=None)
def _marker_pattern(markers):
    alts = [r"\s+".join(re.escape(w) for w in m.split()) for m in markers]
    return re.compile(r"\b(?:" + "|".join(alts) + r")\b", re.IGNORECASE)


def lexicon_hits(text, markers=None):
    markers = default_lexicon() if markers is None else tuple(markers)
    return len(_marker_pattern(markers).findall(text))


def lexicon_score(sentence, markers=None):
    """min(1, hits / 3) over the argument-marker lexicon."""
    text = getattr(sentence, "text", sentence)
    return min(1.0, lexicon_hits(text, markers) / 3.0)


def load_score_file(path):
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            key, score = obj.get("key"), obj.get("score")
            if not isinstance(key, str) or not isinstance(score, (int, float)) or isinstance(score, bool):
                raise ParseError(path, lineno, "expected {\"key\": str, \"score\": number}")
            if not 0.0 <= score <= 1.0:
                raise ParseError(path, lineno, f"score {score} outside [0, 1]")
            if key in scores:
                raise ParseError(path, lineno, f"duplicate key {key!r}")
            scores[key] = float(score)
    return scores


def _remote_scores(config, sentences):
    reply = post_json(config.endpoint.rstrip("/") + "/classify",
                      {"texts": [s.text for s in sentences]}, remote_timeout(config))
    scores = reply.get("scores") if isinstance(reply, dict) else None
    if (not isinstance(scores, list) or len(scores) != len(sentences)
            or not all(isinstance(x, (int, float)) and 0.0 <= x <= 1.0 for x in scores)):
        raise RemoteError(200, f"malformed body: {json.dumps(reply)[:150]}")
    return [float(x) for x in scores]


def classify_arguments(config, sentences):
    """Score every sentence and threshold it; labels align with ``sentences``."""
    if not sentences:
        raise ValueError("sentences must be non-empty")
    if config.kind == "lexicon":
        scores = [lexicon_score(s) for s in sentences]
    elif config.kind == "score_file":
        table = load_score_file(config.path)
        scores = []
        for s in sentences:
            if s.key not in table:
                raise MissingScore(s.key)
            scores.append(table[s.key])
    else:
        scores = _remote_scores(config, sentences)
    return [ArgLabel(s.global_index, sc, sc >= config.threshold)
            for s, sc in zip(sentences, scores)]


def partition(sentences, labels):
    """(arguments, non_arguments), both in global-index order."""
    if len(sentences) != len(labels):
        raise AlignmentError(f"{len(sentences)} sentences but {len(labels)} labels")
    for s, lab in zip(sentences, labels):
        if s.global_index != lab.sentence_global_index:
            raise AlignmentError(f"label for sentence {lab.sentence_global_index} "
                                 f"paired with sentence {s.global_index}")
    args, non_args = [], []
    for s, lab in sorted(zip(sentences, labels), key=lambda p: p[0].global_index):
        (args if lab.is_argument else non_args).append(s)
    return args, non_args
