"""ROUGE-1 recall and precision with clipped unigram counts."""

import re
from collections import Counter
from dataclasses import asdict, dataclass

from .errors import NoReferences
from .rng import XorShift64Star

_SPLIT = re.compile(r"[\W_]+")
STRATEGIES = ("pick_seeded", "best")


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    overlap_count: int
    candidate_tokens: int
    reference_tokens: int

    @property
    def f1(self):
        if self.recall + self.precision == 0:
            return 0.0
        return 2 * self.recall * self.precision / (self.recall + self.precision)

    def to_dict(self):
        return asdict(self)


def rouge_tokenize(text):
    """Lowercase, split on non-alphanumeric runs. No stemming, no stopwords."""
    return [t for t in _SPLIT.split(text.lower()) if t]


def rouge1(candidate, reference):
    cand = Counter(rouge_tokenize(candidate))
    ref = Counter(rouge_tokenize(reference))
    overlap = sum((cand & ref).values())
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    return RougeScore(
        recall=overlap / n_ref if n_ref else 0.0,
        precision=overlap / n_cand if n_cand else 0.0,
        overlap_count=overlap,
        candidate_tokens=n_cand,
        reference_tokens=n_ref,
    )


def rouge1_against_refs(candidate, references, strategy="pick_seeded", seed=0):
    """Score against one of several references.

    ``pick_seeded`` draws one reference uniformly with the seeded generator;
    ``best`` keeps the reference with the highest F1 (first one on ties).
    """
    if not references:
        raise NoReferences("at least one reference summary is required")
    if strategy == "pick_seeded":
        ref = references[XorShift64Star(seed).randbelow(len(references))]
        return rouge1(candidate, ref)
    if strategy == "best":
        scores = [rouge1(candidate, r) for r in references]
        return max(scores, key=lambda s: s.f1)  # max keeps the first maximum
    raise ValueError(f"unknown strategy {strategy!r}")
