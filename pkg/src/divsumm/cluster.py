"""Clustering stage: K-Means++ on embeddings, average-linkage agglomeration on similarities."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidK
from .rng import XorShift64Star

DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-6
DEFAULT_RESTARTS = 8


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: tuple
    centroids: np.ndarray | None = None
    inertia: float | None = None

    def members(self, cluster_id):
        return [i for i, lab in enumerate(self.labels) if lab == cluster_id]

    def groups(self):
        return [self.members(c) for c in range(self.k)]

    def __eq__(self, other):
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        same_centroids = (self.centroids is None and other.centroids is None) or (
            self.centroids is not None and other.centroids is not None
            and np.array_equal(self.centroids, other.centroids))
        return (self.k == other.k and self.labels == other.labels
                and same_centroids and self.inertia == other.inertia)

    __hash__ = None


def _check_k(k, n):
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} must satisfy 1 <= k <= {n}")


def _sq_dists(points, centroids):
    # (n, k) squared Euclidean distances
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def inertia_of(points, labels, centroids):
    points = np.asarray(points, dtype=float)
    diff = points - np.asarray(centroids)[np.asarray(labels)]
    return float(np.einsum("nd,nd->", diff, diff))


def kmeans_pp_seed(points, k, rng):
    """Indices of ``k`` distinct initial centroids by D² sampling.

    The first index is uniform; each later one is drawn with probability
    proportional to the squared distance to its nearest chosen centroid. If
    every remaining point coincides with a chosen one, the draw is uniform
    over the unchosen indices.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    _check_k(k, n)
    chosen = [rng.randbelow(n)]
    d2 = _sq_dists(points, points[chosen])[:, 0]
    while len(chosen) < k:
        weights = d2.copy()
        weights[chosen] = 0.0
        total = float(weights.sum())
        if total > 0.0:
            target = rng.random() * total
            cumulative = np.cumsum(weights)
            idx = int(np.searchsorted(cumulative, target, side="right"))
            idx = min(idx, n - 1)
            while weights[idx] == 0.0:  # float edge at the top of the range
                idx -= 1
        else:
            free = [i for i in range(n) if i not in chosen]
            idx = free[rng.randbelow(len(free))]
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(points, points[[idx]])[:, 0])
    return chosen


def _repair_empty(points, labels, centroids, k):
    # move the point farthest from its centroid (among non-singleton clusters)
    # into each empty cluster, which is recentred on that point
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        own = np.einsum("nd,nd->n", points - centroids[labels], points - centroids[labels])
        movable = counts[labels] > 1
        own[~movable] = -1.0
        far = int(np.argmax(own))
        counts[labels[far]] -= 1
        labels[far] = empty
        counts[empty] = 1
        centroids[empty] = points[far]
    return labels, centroids


def _assign(points, centroids, k):
    labels = np.argmin(_sq_dists(points, centroids), axis=1)  # first minimum wins ties
    return _repair_empty(points, labels, centroids, k)


def kmeans(points, k, max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL, rng=None,
           on_iteration=None, init=None):
    """One Lloyd run from K-Means++ seeds (or from the point indices in ``init``).

    Stops once no centroid moves more than ``tol`` or after ``max_iters``
    updates. ``on_iteration(i, inertia)`` is called after every assignment
    step, which makes the monotone decrease of the objective observable.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    _check_k(k, n)
    if max_iters < 1 or tol < 0:
        raise ValueError("max_iters must be >= 1 and tol >= 0")
    if init is None:
        rng = rng if rng is not None else XorShift64Star(0)
        init = kmeans_pp_seed(points, k, rng)
    elif len(init) != k:
        raise InvalidK(f"init has {len(init)} indices, expected {k}")
    centroids = points[list(init)].copy()

    for it in range(max_iters):
        labels, centroids = _assign(points, centroids, k)
        if on_iteration is not None:
            on_iteration(it, inertia_of(points, labels, centroids))
        updated = np.vstack([points[labels == c].mean(axis=0) for c in range(k)])
        shift = float(np.sqrt(_sq_rows(updated - centroids).max()))
        centroids = updated
        if shift <= tol:
            break

    labels, centroids = _assign(points, centroids, k)
    inertia = inertia_of(points, labels, centroids)
    if on_iteration is not None:
        on_iteration(it + 1, inertia)
    return ClusterAssignment(k=k, labels=tuple(int(x) for x in labels),
                             centroids=centroids, inertia=inertia)


def _sq_rows(a):
    return np.einsum("kd,kd->k", a, a)


def kmeans_best(points, k, seed=0, n_restarts=DEFAULT_RESTARTS,
                max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL):
    """Lowest-inertia result over ``n_restarts`` independently seeded runs.

    Restart ``r`` uses the stream ``XorShift64Star.derive(seed, r)``; ties
    in inertia go to the lowest restart index.
    """
    best = None
    for r in range(n_restarts):
        result = kmeans(points, k, max_iters, tol, XorShift64Star.derive(seed, r))
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def agglomerative(sim, k):
    """Average-linkage agglomeration on a similarity matrix down to ``k`` clusters.

    Each step merges the pair with the highest mean inter-cluster
    similarity. A cluster is identified by its smallest member index; ties
    go to the lexicographically smallest (id, id) pair. Output labels are
    numbered by smallest member.
    """
    entries = np.asarray(getattr(sim, "entries", sim), dtype=float)
    n = entries.shape[0]
    _check_k(k, n)

    # pair sums accumulate along the merge tree, so they do not depend on
    # how the input is indexed
    sums = entries.copy()
    size = {i: 1 for i in range(n)}
    members = {i: [i] for i in range(n)}
    active = list(range(n))

    while len(active) > k:
        best_pair = None
        best_val = -np.inf
        for ai, a in enumerate(active):
            for b in active[ai + 1:]:
                val = sums[a, b] / (size[a] * size[b])
                if val > best_val:
                    best_val, best_pair = val, (a, b)
        a, b = best_pair  # a < b since active is sorted
        for c in active:
            if c != a and c != b:
                sums[a, c] = sums[c, a] = sums[a, c] + sums[b, c]
        size[a] += size.pop(b)
        members[a].extend(members.pop(b))
        active.remove(b)

    labels = [0] * n
    for new_id, cid in enumerate(sorted(active)):
        for i in members[cid]:
            labels[i] = new_id
    return ClusterAssignment(k=k, labels=tuple(labels))
