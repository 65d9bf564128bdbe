"""``summarize`` command-line entry point.

Subcommands::

    summarize run   --config cfg.json --topics DIR... --out PATH [--format tsv|md|json]
                    [--jobs N] [--seed N] [--no-timing]
    summarize eval  --candidate FILE --refs DIR [--strategy pick|best] [--seed N]
    summarize embed --topic DIR --backend hashed|file|remote [--dim D] --out FILE.jsonl
"""

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from .argument import ArgumentBackendConfig
from .corpus import load_topic, segment_sentences, truncate_heads
from .embed import EmbeddingBackendConfig, embed_batch, fnv1a64
from .errors import ConfigError, SummError
from .report import FORMATS, SummaryReport, emit_report, fmt4, mode_label, parse_mode_label
from .rng import splitmix64
from .rouge import rouge1_against_refs
from .summarize import Backends, SummaryConfig, run_pipeline

DEFAULT_MODES = ("full+kmeans", "args+kmeans", "mix-66.7", "mix-50", "mix-33.3",
                 "args+agglomerative")
_TOP_KEYS = {"modes", "summary", "embedding", "argument", "rouge", "preprocess"}
_LABEL_KEYS = {"mode", "clustering", "mix_nonarg_budget_chars", "diversity_weight"}
_SUMMARY_KEYS = {f.name for f in fields(SummaryConfig)} - _LABEL_KEYS
_STRATEGIES = {"pick": "pick_seeded", "pick_seeded": "pick_seeded", "best": "best"}


@dataclass
class ExperimentConfig:
    modes: list
    summary: dict = field(default_factory=dict)
    embedding: dict = field(default_factory=lambda: {"kind": "hashed_tfidf", "dim": 1024})
    argument: dict | None = field(default_factory=lambda: {"kind": "lexicon", "threshold": 0.5})
    rouge_strategy: str = "pick_seeded"
    truncate: dict | None = None
    base_dir: Path = Path(".")

    def summary_config(self, label, seed=None):
        params = dict(self.summary)
        params.update(parse_mode_label(label))
        if seed is not None:
            params["seed"] = seed
        return SummaryConfig(**params)

    def backends(self, topic_dir, topic_name):
        def resolve(d):
            d = dict(d)
            if d.get("path"):
                p = Path(d["path"].format(topic_dir=topic_dir, topic=topic_name))
                d["path"] = str(p if p.is_absolute() else self.base_dir / p)
            return d
        emb = EmbeddingBackendConfig(**resolve(self.embedding))
        arg = ArgumentBackendConfig(**resolve(self.argument)) if self.argument else None
        return Backends(embedding=emb, argument=arg)

    def resolved(self, summary_config):
        return {"summary": summary_config.to_dict(), "embedding": self.embedding,
                "argument": self.argument, "rouge": {"strategy": self.rouge_strategy},
                "preprocess": {"truncate": self.truncate}}


def _line_of(text, key):
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def parse_config(text, base_dir=Path(".")):
    """Parse and validate an experiment config; errors cite key and line."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", line=1)

    def fail(key, msg):
        raise ConfigError(msg, key=key, line=_line_of(text, key))

    for key in raw:
        if key not in _TOP_KEYS:
            fail(key, "unknown key")

    modes = raw.get("modes", list(DEFAULT_MODES))
    if not isinstance(modes, list) or not modes:
        fail("modes", "must be a non-empty list of mode labels")
    for label in modes:
        try:
            parse_mode_label(label)
        except (ValueError, TypeError):
            fail("modes", f"unknown mode label {label!r}")

    summary = raw.get("summary", {})
    if not isinstance(summary, dict):
        fail("summary", "must be an object")
    for key in summary:
        if key not in _SUMMARY_KEYS:
            hint = " (set through the mode label)" if key in _LABEL_KEYS else ""
            fail(key, f"unknown summary key{hint}")

    cfg = ExperimentConfig(modes=list(modes), summary=summary, base_dir=Path(base_dir))
    for section in ("embedding", "argument"):
        if section in raw:
            value = raw[section]
            if value is not None and not isinstance(value, dict):
                fail(section, "must be an object or null")
            if section == "embedding" and value is None:
                fail(section, "an embedding backend is required")
            setattr(cfg, section, value)

    rouge = raw.get("rouge", {})
    if not isinstance(rouge, dict) or set(rouge) - {"strategy"}:
        fail("rouge", "expected {\"strategy\": \"pick_seeded\" | \"best\"}")
    strategy = rouge.get("strategy", "pick_seeded")
    if strategy not in _STRATEGIES:
        fail("strategy", f"unknown strategy {strategy!r}")
    cfg.rouge_strategy = _STRATEGIES[strategy]

    pre = raw.get("preprocess", {})
    if not isinstance(pre, dict) or set(pre) - {"truncate"}:
        fail("preprocess", "expected {\"truncate\": {\"n_docs\": int, \"n_words\": int}}")
    if pre.get("truncate") is not None:
        t = pre["truncate"]
        if not isinstance(t, dict) or set(t) != {"n_docs", "n_words"}:
            fail("truncate", "expected {\"n_docs\": int, \"n_words\": int}")
        cfg.truncate = t

    # instantiate everything once so value errors surface before any topic work
    for label in cfg.modes:
        try:
            cfg.summary_config(label)
        except (TypeError, ValueError) as exc:
            fail("summary", str(exc))
    try:
        EmbeddingBackendConfig(**cfg.embedding)
    except (TypeError, ValueError) as exc:
        fail("embedding", str(exc))
    if cfg.argument is not None:
        try:
            ArgumentBackendConfig(**cfg.argument)
        except (TypeError, ValueError) as exc:
            fail("argument", str(exc))
    return cfg


def topic_seed(seed, topic_name):
    return splitmix64(int(seed) ^ fnv1a64(topic_name))


def run_topic(cfg, topic_dir, seed=None):
    """All requested modes for one topic; returns a list of reports."""
    topic = load_topic(topic_dir)
    backends = cfg.backends(str(Path(topic_dir).resolve()), topic.name)
    sentences = None
    reports = []
    for label in cfg.modes:
        sc = cfg.summary_config(label, seed)
        start = time.perf_counter()
        if cfg.truncate:
            doc = truncate_heads(topic, cfg.truncate["n_docs"], cfg.truncate["n_words"], sc.seed)
            sentences = segment_sentences(doc)
        summary = run_pipeline(topic, sc, backends, sentences=sentences)
        score = None
        if topic.references:
            score = rouge1_against_refs(summary.text, list(topic.references),
                                        cfg.rouge_strategy, topic_seed(sc.seed, topic.name))
        elapsed = int(round((time.perf_counter() - start) * 1000))
        reports.append(SummaryReport(topic=topic.name, mode=mode_label(sc), summary=summary,
                                     config_echo=cfg.resolved(sc), rouge=score,
                                     timing_ms=elapsed))
    return reports


def run_experiments(config_file, topic_dirs, output_path, fmt="tsv", jobs=1, seed=None,
                    timing=True):
    """Run every topic x mode and write the report. Returns the exit code."""
    try:
        path = Path(config_file)
        cfg = parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
    except OSError as exc:
        print(f"error: cannot read config {config_file}: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {config_file}: {exc}", file=sys.stderr)
        return 1

    def task(topic_dir):
        try:
            return topic_dir, run_topic(cfg, topic_dir, seed), None
        except (SummError, OSError, ValueError) as exc:
            return topic_dir, [], f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(task, topic_dirs))

    reports, failures = [], []
    for topic_dir, rows, err in results:
        reports.extend(rows)
        if err:
            failures.append((str(topic_dir), err))
            print(f"error: topic {topic_dir}: {err}", file=sys.stderr)
    reports.sort(key=lambda r: (r.topic, r.mode))
    data = emit_report(reports, fmt, timing=timing, footer=True, failures=failures)
    if str(output_path) == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(output_path).write_bytes(data)
    return 1 if failures else 0


def _cmd_run(args):
    return run_experiments(args.config, args.topics, args.out, args.format, args.jobs,
                           args.seed, timing=not args.no_timing)


def _cmd_eval(args):
    try:
        candidate = Path(args.candidate).read_text(encoding="utf-8")
        refs_dir = Path(args.refs)
        refs = [p.read_text(encoding="utf-8") for p in
                sorted(refs_dir.glob("*.txt"), key=lambda p: p.name.encode("utf-8"))]
        score = rouge1_against_refs(candidate, refs, _STRATEGIES[args.strategy], args.seed)
    except (OSError, SummError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("recall\tprecision\toverlap\tcandidate_tokens\treference_tokens")
    print(f"{fmt4(score.recall)}\t{fmt4(score.precision)}\t{score.overlap_count}\t"
          f"{score.candidate_tokens}\t{score.reference_tokens}")
    return 0


def _cmd_embed(args):
    kind = {"hashed": "hashed_tfidf", "file": "file", "remote": "remote"}[args.backend]
    params = {"kind": kind}
    if kind == "hashed_tfidf":
        params["dim"] = args.dim
    elif kind == "file":
        params["path"] = args.path
    else:
        params["endpoint"] = args.endpoint
    try:
        config = EmbeddingBackendConfig(**params)
        topic = load_topic(args.topic)
        sentences = topic.sentences()
        vectors = embed_batch(config, sentences)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SummError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w", encoding="utf-8") as fh:
        for s, v in zip(sentences, vectors):
            fh.write(json.dumps({"key": s.key, "vector": [float(x) for x in v]}) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="summarize",
                                     description="Diversity-aware multi-document summarization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment matrix over topic directories")
    run.add_argument("--config", required=True)
    run.add_argument("--topics", nargs="+", required=True)
    run.add_argument("--out", required=True, help="output path, or - for stdout")
    run.add_argument("--format", choices=FORMATS, default="tsv")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="overrides summary.seed")
    run.add_argument("--no-timing", action="store_true")
    run.set_defaults(func=_cmd_run)

    ev = sub.add_parser("eval", help="ROUGE-1 of a candidate against reference files")
    ev.add_argument("--candidate", required=True)
    ev.add_argument("--refs", required=True)
    ev.add_argument("--strategy", choices=("pick", "best"), default="pick")
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(func=_cmd_eval)

    emb = sub.add_parser("embed", help="precompute sentence embeddings as JSONL")
    emb.add_argument("--topic", required=True)
    emb.add_argument("--backend", choices=("hashed", "file", "remote"), default="hashed")
    emb.add_argument("--dim", type=int, default=1024)
    emb.add_argument("--path")
    emb.add_argument("--endpoint")
    emb.add_argument("--out", required=True)
    emb.set_defaults(func=_cmd_embed)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
