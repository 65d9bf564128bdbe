"""Experiment report rows, mode labels, and serialization."""

import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from statistics import fmean

from .rouge import RougeScore
from .summarize import Summary, SummaryConfig

TSV_COLUMNS = ("topic", "mode", "recall", "precision", "chars", "config_hash")
FORMATS = ("tsv", "md", "json")

# non-argument budget -> label percentage
MIX_LABELS = {220: "33.3", 330: "50", 440: "66.7"}
_MIX_BUDGETS = {v: k for k, v in MIX_LABELS.items()}
_LABEL = re.compile(
    r"^(?:(?P<full>full|args)\+(?P<clus>kmeans|agglomerative)"
    r"|mix-(?P<pct>33\.3|50|66\.7)(?:\+(?P<mixclus>kmeans|agglomerative))?"
    r"|diverse-(?P<lam>\d+(?:\.\d+)?))$"
)


def mode_label(config):
    """Report-row label for a resolved config; inverse of :func:`parse_mode_label`."""
    if config.mode == "full":
        return f"full+{config.clustering}"
    if config.mode == "only_arguments":
        return f"args+{config.clustering}"
    if config.mode == "mix":
        label = f"mix-{MIX_LABELS[config.mix_nonarg_budget_chars]}"
        return label if config.clustering == "kmeans" else f"{label}+{config.clustering}"
    return f"diverse-{config.diversity_weight:g}"


def parse_mode_label(label):
    """Config overrides encoded by a mode label.

    >>> parse_mode_label("mix-33.3")
    {'mode': 'mix', 'mix_nonarg_budget_chars': 220, 'clustering': 'kmeans'}
    """
    m = _LABEL.match(label)
    if not m:
        raise ValueError(f"unknown mode label {label!r}")
    if m["full"]:
        mode = "full" if m["full"] == "full" else "only_arguments"
        return {"mode": mode, "clustering": m["clus"]}
    if m["pct"]:
        return {"mode": "mix", "mix_nonarg_budget_chars": _MIX_BUDGETS[m["pct"]],
                "clustering": m["mixclus"] or "kmeans"}
    return {"mode": "diverse", "diversity_weight": float(m["lam"])}


def config_hash(resolved):
    """Stable 12-hex-digit digest of a resolved config dict."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def fmt4(x):
    """Four decimals, round-half-even on the shortest decimal repr of ``x``."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


@dataclass
class SummaryReport:
    topic: str
    mode: str
    summary: Summary
    config_echo: dict
    rouge: RougeScore | None = None
    timing_ms: int = 0
    config_hash: str = field(default="")

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash(self.config_echo)

    def to_dict(self):
        return {
            "topic": self.topic,
            "mode": self.mode,
            "summary": self.summary.to_dict(),
            "rouge": self.rouge.to_dict() if self.rouge else None,
            "config_echo": self.config_echo,
            "config_hash": self.config_hash,
            "timing_ms": self.timing_ms,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(topic=d["topic"], mode=d["mode"], summary=Summary.from_dict(d["summary"]),
                   config_echo=d["config_echo"],
                   rouge=RougeScore(**d["rouge"]) if d.get("rouge") else None,
                   timing_ms=d.get("timing_ms", 0), config_hash=d.get("config_hash", ""))

    def label_from_config(self):
        return mode_label(SummaryConfig(**self.config_echo["summary"]))


def aggregate(reports):
    """Mean recall/precision per mode over the reports that carry ROUGE."""
    by_mode = {}
    for r in reports:
        if r.rouge is not None:
            by_mode.setdefault(r.mode, []).append(r.rouge)
    return [
        {"mode": mode, "recall": fmean(s.recall for s in scores),
         "precision": fmean(s.precision for s in scores), "n_topics": len(scores)}
        for mode, scores in sorted(by_mode.items())
    ]


def _rows(reports, timing):
    for r in reports:
        row = [r.topic, r.mode,
               fmt4(r.rouge.recall) if r.rouge else "",
               fmt4(r.rouge.precision) if r.rouge else "",
               str(r.summary.char_len), r.config_hash]
        if timing:
            row.append(str(r.timing_ms))
        yield row


def emit_report(reports, fmt="tsv", timing=False, footer=False, failures=()):
    """Serialize reports as bytes.

    ``footer`` appends per-mode means (and any per-topic failures). JSON
    output is a plain list of report objects unless a footer is requested.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    if fmt == "json":
        rows = [r.to_dict() for r in reports]
        if not timing:
            for row in rows:
                row.pop("timing_ms")
        payload = rows
        if footer:
            payload = {"reports": rows, "aggregate": aggregate(reports),
                       "failures": [{"topic": t, "error": e} for t, e in failures]}
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")

    header = list(TSV_COLUMNS) + (["timing_ms"] if timing else [])
    out = io.StringIO()
    if fmt == "tsv":
        out.write("\t".join(header) + "\n")
        for row in _rows(reports, timing):
            out.write("\t".join(row) + "\n")
        if footer:
            out.write("\n# aggregate\tmode\tmean_recall\tmean_precision\tn_topics\n")
            for agg in aggregate(reports):
                out.write(f"# aggregate\t{agg['mode']}\t{fmt4(agg['recall'])}\t"
                          f"{fmt4(agg['precision'])}\t{agg['n_topics']}\n")
            for topic, err in failures:
                out.write(f"# failed\t{topic}\t{err}\n")
    else:
        out.write("| " + " | ".join(header) + " |\n")
        out.write("|" + "|".join("---" for _ in header) + "|\n")
        for row in _rows(reports, timing):
            out.write("| " + " | ".join(row) + " |\n")
        if footer:
            out.write("\n| mode | mean recall | mean precision | topics |\n|---|---|---|---|\n")
            for agg in aggregate(reports):
                out.write(f"| {agg['mode']} | {fmt4(agg['recall'])} | "
                          f"{fmt4(agg['precision'])} | {agg['n_topics']} |\n")
            if failures:
                out.write("\nFailed topics:\n\n")
                for topic, err in failures:
                    out.write(f"- {topic}: {err}\n")
    return out.getvalue().encode("utf-8")
