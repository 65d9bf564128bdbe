"""Summarization stage and pipeline orchestration.

Covers cluster representatives, budgeted assembly, the mix regime, the
diversity-penalized loss and its subset-selection counterpart, and the
end-to-end :func:`run_pipeline`.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations

import numpy as np

from . import argument as argmod
from . import cluster as clustermod
from .embed import EmbeddingBackendConfig, SimilarityMatrix, embed_batch, pairwise_similarity
from .errors import EmptyCluster, InvalidCount, PipelineError, SummError, TooLarge

BCE_EPS = 1e-7
BRUTE_FORCE_MAX_N = 20
CHARS_PER_SENTENCE = 132  # 660 chars / 5 sentences
MODES = ("full", "only_arguments", "mix", "diverse")
MIX_NONARG_BUDGETS = (220, 330, 440)
JOINER = " "


@dataclass(frozen=True)
class SummaryConfig:
    mode: str = "full"
    total_budget_chars: int = 660
    mix_nonarg_budget_chars: int = 330
    max_sentence_chars: int = 200
    clustering: str = "kmeans"
    k: int = 5
    diversity_weight: float = 1.0
    select_count: int | None = None
    seed: int = 0
    include_diagonal: bool = False
    cluster_in_full_mode: bool = True
    cluster_in_args_mode: bool = True
    n_restarts: int = clustermod.DEFAULT_RESTARTS
    max_iters: int = clustermod.DEFAULT_MAX_ITERS
    tol: float = clustermod.DEFAULT_TOL

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.clustering not in ("kmeans", "agglomerative"):
            raise ValueError("clustering must be 'kmeans' or 'agglomerative'")
        if self.total_budget_chars < 1:
            raise ValueError("total_budget_chars must be >= 1")
        if self.max_sentence_chars < 1:
            raise ValueError("max_sentence_chars must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.diversity_weight < 0:
            raise ValueError("diversity_weight must be >= 0")
        if self.select_count is not None and self.select_count < 1:
            raise ValueError("select_count must be >= 1")
        if self.mode == "mix":
            if self.mix_nonarg_budget_chars not in MIX_NONARG_BUDGETS:
                raise ValueError(f"mix_nonarg_budget_chars must be one of {MIX_NONARG_BUDGETS}")
            if self.mix_nonarg_budget_chars > self.total_budget_chars:
                raise ValueError("mix_nonarg_budget_chars exceeds total_budget_chars")

    @property
    def arg_budget_chars(self):
        return self.total_budget_chars - self.mix_nonarg_budget_chars

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Summary:
    text: str
    sentence_indices: tuple
    config_echo: SummaryConfig | None = None
    n_selected: int = 0
    n_clusters: int = 0
    parts: dict = field(default_factory=dict, compare=False)

    @property
    def char_len(self):
        return len(self.text)

    def to_dict(self):
        return {
            "text": self.text,
            "sentence_indices": list(self.sentence_indices),
            "char_len": self.char_len,
            "n_selected": self.n_selected,
            "n_clusters": self.n_clusters,
            "config_echo": self.config_echo.to_dict() if self.config_echo else None,
        }

    @classmethod
    def from_dict(cls, d):
        cfg = d.get("config_echo")
        return cls(text=d["text"], sentence_indices=tuple(d["sentence_indices"]),
                   config_echo=SummaryConfig(**cfg) if cfg else None,
                   n_selected=d.get("n_selected", 0), n_clusters=d.get("n_clusters", 0))


@dataclass(frozen=True)
class SelectionInstance:
    salience: np.ndarray
    sim: np.ndarray
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        sal = np.asarray(self.salience, dtype=float)
        sim = np.asarray(getattr(self.sim, "entries", self.sim), dtype=float)
        object.__setattr__(self, "salience", sal)
        object.__setattr__(self, "sim", sim)
        if sim.shape != (sal.shape[0], sal.shape[0]):
            raise ValueError("sim must be n x n with n = len(salience)")
        if self.ground_truth is not None:
            gt = np.asarray(self.ground_truth, dtype=float)
            if gt.shape != sal.shape:
                raise ValueError("ground_truth must have length n")
            object.__setattr__(self, "ground_truth", gt)

    @property
    def n(self):
        return self.salience.shape[0]


@dataclass(frozen=True)
class Backends:
    embedding: EmbeddingBackendConfig = field(
        default_factory=lambda: EmbeddingBackendConfig(kind="hashed_tfidf", dim=1024))
    argument: argmod.ArgumentBackendConfig | None = field(
        default_factory=argmod.ArgumentBackendConfig)


# -- diversity objective ----------------------------------------------------

def diversity_loss(instance, include_diagonal=False):
    """Binary cross-entropy plus similarity penalty weighted by predicted inclusion.

    loss = sum_i BCE(v_i, p_i) + sum_{i,j} p_i p_j sim(i, j), where the
    double sum runs over ordered pairs with i != j unless
    ``include_diagonal`` is set. ``p`` is clamped to [eps, 1 - eps].
    """
    if instance.ground_truth is None:
        raise ValueError("diversity_loss needs ground_truth")
    p = np.clip(instance.salience, BCE_EPS, 1.0 - BCE_EPS)
    v = instance.ground_truth
    bce = float(-np.sum(v * np.log(p) + (1.0 - v) * np.log1p(-p)))
    weights = np.outer(p, p)
    if not include_diagonal:
        np.fill_diagonal(weights, 0.0)
    return bce + float(np.sum(weights * instance.sim))


def selection_objective(salience, sim, subset, weight):
    """J(S) = -sum of salience over S + weight * sum over ordered pairs i != j in S of sim."""
    idx = list(subset)
    sal = float(np.sum(np.asarray(salience, dtype=float)[idx])) if idx else 0.0
    return -sal + weight * pair_mass(sim, idx)


def pair_mass(sim, subset):
    entries = np.asarray(getattr(sim, "entries", sim), dtype=float)
    idx = list(subset)
    if len(idx) < 2:
        return 0.0
    block = entries[np.ix_(idx, idx)]
    return float(block.sum() - np.trace(block))


def _greedy_order(salience, sim, select_count, weight):
    salience = np.asarray(salience, dtype=float)
    entries = np.asarray(getattr(sim, "entries", sim), dtype=float)
    n = salience.shape[0]
    if not 1 <= select_count <= n:
        raise InvalidCount(f"select_count={select_count} must satisfy 1 <= count <= {n}")
    if weight < 0:
        raise ValueError("weight must be >= 0")
    # marginal gain of adding i: -salience_i + 2 * weight * sum_{j in S} sim(i, j)
    penalty = np.zeros(n)
    taken = np.zeros(n, dtype=bool)
    order = []
    for _ in range(select_count):
        delta = -salience + 2.0 * weight * penalty
        delta[taken] = np.inf
        i = int(np.argmin(delta))  # lowest index on ties
        order.append(i)
        taken[i] = True
        penalty += (entries[i] + entries[:, i]) / 2.0
    return order


def greedy_diverse_select(salience, sim, select_count, weight):
    """Greedy minimizer of :func:`selection_objective`; indices ascending."""
    return sorted(_greedy_order(salience, sim, select_count, weight))


def brute_force_select(salience, sim, select_count, weight):
    """Exact minimizer of :func:`selection_objective` over all subsets of one size.

    Returns ``(indices, objective)``; ties resolve to the lexicographically
    smallest index tuple. Refuses n > 20.
    """
    n = len(salience)
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"n={n} exceeds brute-force limit {BRUTE_FORCE_MAX_N}")
    if not 1 <= select_count <= n:
        raise InvalidCount(f"select_count={select_count} must satisfy 1 <= count <= {n}")
    best, best_val = None, math.inf
    for subset in combinations(range(n), select_count):
        val = selection_objective(salience, sim, subset, weight)
        if val < best_val:
            best, best_val = list(subset), val
    return best, best_val


# -- representatives and assembly ------------------------------------------

def representative_centroid(members, embeddings, centroid):
    """Member closest to ``centroid``; lowest global index on ties.

    ``embeddings`` maps a global index to its vector (dict or indexable).
    """
    if not members:
        raise EmptyCluster("cluster has no members")
    centroid = np.asarray(centroid, dtype=float)
    best, best_d = None, math.inf
    for g in sorted(members):
        diff = np.asarray(embeddings[g], dtype=float) - centroid
        d = float(np.dot(diff, diff))
        if d < best_d:
            best, best_d = g, d
    return best


def representative_cumulative(members, sim):
    """Member with the largest summed similarity to the other members."""
    if not members:
        raise EmptyCluster("cluster has no members")
    entries = np.asarray(getattr(sim, "entries", sim), dtype=float)
    best, best_v = None, -math.inf
    ordered = sorted(members)
    for i in ordered:
        total = sum(float(entries[i, j]) for j in ordered if j != i)
        if total > best_v:
            best, best_v = i, total
    return best


def filter_long(candidates, max_sentence_chars):
    """Drop sentences of ``max_sentence_chars`` or more, unless that drops all."""
    kept = [s for s in candidates if s.char_len < max_sentence_chars]
    return kept if kept else list(candidates)


def assemble(candidates, budget_chars, max_sentence_chars=200, config=None):
    """Greedy budgeted concatenation.

    Candidates are visited in the given order and each is kept if it still
    fits (counting a one-space joiner). The kept sentences are emitted in
    source order.
    """
    if budget_chars < 1:
        raise ValueError("budget must be >= 1")
    pool = filter_long(candidates, max_sentence_chars)
    chosen = []
    used = 0
    for s in pool:
        extra = s.char_len + (len(JOINER) if chosen else 0)
        if used + extra <= budget_chars:
            chosen.append(s)
            used += extra
    chosen.sort(key=lambda s: s.global_index)
    return Summary(text=JOINER.join(s.text for s in chosen),
                   sentence_indices=tuple(s.global_index for s in chosen),
                   config_echo=config, n_selected=len(candidates))


def join_summaries(first, second, config=None):
    text = JOINER.join(t for t in (first.text, second.text) if t)
    return Summary(text=text,
                   sentence_indices=tuple(sorted(first.sentence_indices + second.sentence_indices)),
                   config_echo=config,
                   n_selected=first.n_selected + second.n_selected,
                   n_clusters=first.n_clusters + second.n_clusters,
                   parts={"arguments": first, "non_arguments": second})


# -- pipeline ---------------------------------------------------------------

class TopicContext:
    """Per-topic embeddings and similarity matrices, computed once.

    Rows are indexed by global sentence index.
    """

    def __init__(self, sentences, backends):
        if [s.global_index for s in sentences] != list(range(len(sentences))):
            raise PipelineError("segment", ValueError("global indices must run 0..n-1"))
        self.sentences = sentences
        self.backends = backends
        self.embeddings = _stage("embed", embed_batch, backends.embedding, sentences)
        self._sims = {}
        self._labels = None

    def sim(self, metric):
        if metric not in self._sims:
            self._sims[metric] = _stage("similarity", pairwise_similarity,
                                        list(self.embeddings), metric)
        return self._sims[metric]

    def labels(self):
        if self._labels is None:
            if self.backends.argument is None:
                raise PipelineError("selection", ValueError("no argument backend configured"))
            self._labels = _stage("selection", argmod.classify_arguments,
                                  self.backends.argument, self.sentences)
        return self._labels


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (SummError, ValueError, OSError) as exc:
        raise PipelineError(name, exc) from exc


def _cluster_representatives(pool, ctx, config):
    """One representative per cluster, ordered by cluster size (largest first)."""
    idx = [s.global_index for s in pool]
    k = min(config.k, len(pool))
    if config.clustering == "kmeans":
        result = _stage("clustering", clustermod.kmeans_best, ctx.embeddings[idx], k,
                        seed=config.seed, n_restarts=config.n_restarts,
                        max_iters=config.max_iters, tol=config.tol)
    else:
        result = _stage("clustering", clustermod.agglomerative, ctx.sim("cosine").sub(idx), k)

    reps = []
    for c, local in enumerate(result.groups()):
        members = [idx[i] for i in local]
        if config.clustering == "kmeans":
            rep = representative_centroid(members, ctx.embeddings, result.centroids[c])
        else:
            rep = representative_cumulative(members, ctx.sim("cosine"))
        reps.append((-len(members), rep))
    reps.sort()
    by_index = {s.global_index: s for s in pool}
    return [by_index[g] for _, g in reps], result.k


def _summarize_set(pool, ctx, config, budget, clustered=True):
    if not pool:
        return Summary(text="", sentence_indices=(), config_echo=config)
    pool = filter_long(pool, config.max_sentence_chars)
    if clustered:
        candidates, n_clusters = _cluster_representatives(pool, ctx, config)
    else:
        candidates, n_clusters = list(pool), 0
    summary = _stage("assemble", assemble, candidates, budget, config.max_sentence_chars, config)
    return replace(summary, n_selected=len(pool), n_clusters=n_clusters)


def mix_summarize(args, non_args, config, ctx):
    """Summarize arguments and non-arguments separately, then concatenate.

    Non-arguments get ``mix_nonarg_budget_chars``, arguments the remainder;
    an empty set forfeits its share. When both parts are non-empty the
    argument part gives up one character for the joiner.
    """
    non_part = _summarize_set(non_args, ctx, config, config.mix_nonarg_budget_chars)
    arg_budget = config.arg_budget_chars - (len(JOINER) if non_part.text else 0)
    if arg_budget >= 1:
        arg_part = _summarize_set(args, ctx, config, arg_budget)
    else:
        arg_part = Summary(text="", sentence_indices=(), config_echo=config)
    return join_summaries(arg_part, non_part, config)


def default_select_count(budget_chars):
    return max(1, math.ceil(budget_chars / CHARS_PER_SENTENCE))


def diverse_summarize(pool, ctx, config):
    if not pool:
        return Summary(text="", sentence_indices=(), config_echo=config)
    pool = filter_long(pool, config.max_sentence_chars)
    idx = [s.global_index for s in pool]
    if ctx.backends.argument is not None:
        scores = {lab.sentence_global_index: lab.score for lab in ctx.labels()}
        salience = np.array([scores[g] for g in idx])
    else:
        salience = np.full(len(idx), 0.5)
    count = config.select_count or default_select_count(config.total_budget_chars)
    count = min(count, len(pool))
    order = _stage("diverse_select", _greedy_order, salience, ctx.sim("dot").sub(idx),
                   count, config.diversity_weight)
    summary = _stage("assemble", assemble, [pool[i] for i in order],
                     config.total_budget_chars, config.max_sentence_chars, config)
    return replace(summary, n_selected=len(pool))


def run_pipeline(topic, config, backends=None, sentences=None):
    """Summarize one topic under ``config``.

    ``sentences`` overrides the topic's own segmentation (used for
    preprocessed inputs). Errors surface as :class:`PipelineError` naming
    the failing stage.
    """
    backends = backends or Backends()
    if sentences is None:
        sentences = _stage("segment", topic.sentences)
    if not sentences:
        return Summary(text="", sentence_indices=(), config_echo=config)
    ctx = TopicContext(sentences, backends)

    if config.mode == "full":
        return _summarize_set(sentences, ctx, config, config.total_budget_chars,
                              clustered=config.cluster_in_full_mode)

    if config.mode == "diverse":
        return diverse_summarize(sentences, ctx, config)

    args, non_args = _stage("selection", argmod.partition, sentences, ctx.labels())
    if config.mode == "only_arguments":
        summary = _summarize_set(args, ctx, config, config.total_budget_chars,
                                 clustered=config.cluster_in_args_mode)
        return replace(summary, n_selected=len(args))
    return mix_summarize(args, non_args, config, ctx)
