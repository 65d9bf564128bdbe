"""Sentence embedding backends and similarity primitives.

Embeddings are plain float64 numpy arrays: one 1-D vector per sentence,
stacked into an ``(n, dim)`` matrix by :func:`embed_batch`.
"""

import json
import math
import os
import re
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, DuplicateKey, MissingEmbedding, ParseError,
                     RemoteError, ZeroVector)
from .rng import MASK64, splitmix64

_TOKEN = re.compile(r"[^\W_]+")
DEFAULT_TIMEOUT_S = 30.0
_EMPTY_TERM = "\x00empty"


@dataclass(frozen=True)
class EmbeddingBackendConfig:
    kind: str = "hashed_tfidf"
    dim: int | None = None
    path: str | None = None
    endpoint: str | None = None
    timeout_s: float | None = None

    def __post_init__(self):
        required = {"hashed_tfidf": "dim", "file": "path", "remote": "endpoint"}
        if self.kind not in required:
            raise ValueError(f"unknown embedding backend {self.kind!r}")
        for kind, name in required.items():
            is_set = getattr(self, name) is not None
            if kind == self.kind and not is_set:
                raise ValueError(f"{self.kind} backend requires {name!r}")
            if kind != self.kind and is_set:
                raise ValueError(f"{name!r} is not valid for the {self.kind} backend")
        if self.kind == "hashed_tfidf" and self.dim < 8:
            raise ValueError("hashed_tfidf dim must be >= 8")


@dataclass(frozen=True)
class SimilarityMatrix:
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]

    def __getitem__(self, ij):
        return self.entries[ij]

    def sub(self, indices):
        """Restriction to the given row/column indices."""
        idx = np.asarray(indices, dtype=int)
        return SimilarityMatrix(self.entries[np.ix_(idx, idx)])


def tokenize(text):
    return _TOKEN.findall(text.lower())


def fnv1a64(text):
    """64-bit FNV-1a over the UTF-8 bytes of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def term_slot(term, dim):
    """Bucket and sign for a term.

    bucket = fnv1a64(term) mod dim; sign = -1 if the top bit of
    splitmix64(fnv1a64(term)) is set, else +1.
    """
    h = fnv1a64(term)
    sign = -1.0 if splitmix64(h) >> 63 else 1.0
    return h % dim, sign


def hashed_tfidf_embed(corpus_sentences, dim, normalize=True):
    """Signed feature-hashed TF-IDF vectors, L2-normalized.

    idf(t) = ln(1 + N / df(t)) over the given sentences. A sentence whose
    hashed vector is exactly zero (no tokens, or a perfect sign collision)
    falls back to the slot of a reserved placeholder term.
    ``normalize=False`` returns the raw weights (for inspection only).
    """
    if dim < 8:
        raise ValueError("dim must be >= 8")
    token_lists = [tokenize(s.text if hasattr(s, "text") else s) for s in corpus_sentences]
    n = len(token_lists)
    df = Counter()
    for toks in token_lists:
        df.update(set(toks))
    idf = {t: math.log(1.0 + n / c) for t, c in df.items()}

    out = np.zeros((n, dim))
    for row, toks in enumerate(token_lists):
        for term, tf in sorted(Counter(toks).items()):
            bucket, sign = term_slot(term, dim)
            out[row, bucket] += sign * tf * idf[term]
        norm = np.linalg.norm(out[row])
        if not normalize:
            continue
        if norm == 0.0:
            out[row] = 0.0
            bucket, sign = term_slot(_EMPTY_TERM, dim)
            out[row, bucket] = sign
        else:
            out[row] /= norm
    return out


def _parse_vector(obj, where):
    vec = obj.get("vector")
    if not isinstance(vec, list) or not vec:
        raise ParseError(*where, "'vector' must be a non-empty list of numbers")
    try:
        arr = np.array(vec, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(*where, "'vector' holds a non-numeric value") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ParseError(*where, "'vector' must be a flat list of finite numbers")
    return arr


def load_embedding_file(path):
    """Read a JSONL embedding file into ``{key: vector}``.

    Each line: ``{"key": "<doc_id>#<idx>", "vector": [f, ...]}``. Blank
    lines are skipped.
    """
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or not isinstance(obj.get("key"), str):
                raise ParseError(path, lineno, "expected an object with a string 'key'")
            key = obj["key"]
            if key in vectors:
                raise DuplicateKey(key, lineno)
            arr = _parse_vector(obj, (path, lineno))
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise DimensionMismatch(f"{path}:{lineno}: dim {arr.shape[0]} != {dim}")
            vectors[key] = arr
    return vectors


def remote_timeout(config=None):
    env = os.environ.get("SUMM_REMOTE_TIMEOUT_MS")
    if env:
        return float(env) / 1000.0
    if config is not None and config.timeout_s is not None:
        return config.timeout_s
    return DEFAULT_TIMEOUT_S


def post_json(url, payload, timeout):
    """POST a JSON body and return the decoded JSON response.

    Non-200 answers, transport failures, and undecodable bodies all raise
    :class:`RemoteError`.
    """
    data = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(url, data=data, method="POST",
                                     headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            status = resp.status
            body = resp.read().decode("utf-8", errors="replace")
    except urllib.error.HTTPError as exc:
        body = exc.read().decode("utf-8", errors="replace") if exc.fp else ""
        raise RemoteError(exc.code, body) from None
    except (urllib.error.URLError, OSError) as exc:
        raise RemoteError(0, str(getattr(exc, "reason", exc))) from None
    if status != 200:
        raise RemoteError(status, body)
    try:
        return json.loads(body)
    except json.JSONDecodeError:
        raise RemoteError(status, body) from None


def _remote_embed(config, texts):
    reply = post_json(config.endpoint.rstrip("/") + "/embed", {"texts": texts},
                      remote_timeout(config))
    vectors = reply.get("vectors") if isinstance(reply, dict) else None
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise RemoteError(200, f"malformed body: {json.dumps(reply)[:150]}")
    try:
        out = [np.array(v, dtype=float) for v in vectors]
    except (TypeError, ValueError):
        raise RemoteError(200, "malformed body: non-numeric vector") from None
    if any(v.ndim != 1 or not np.all(np.isfinite(v)) for v in out):
        raise RemoteError(200, "malformed body: vectors must be flat and finite")
    return out


def _stack(vectors):
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatch(f"backend returned vectors of dims {sorted(dims)}")
    return np.vstack(vectors)


def embed_batch(config, sentences):
    """One embedding row per sentence, order-aligned with ``sentences``."""
    if not sentences:
        raise ValueError("sentences must be non-empty")
    if config.kind == "hashed_tfidf":
        return hashed_tfidf_embed(sentences, config.dim)
    if config.kind == "file":
        table = load_embedding_file(config.path)
        rows = []
        for s in sentences:
            if s.key not in table:
                raise MissingEmbedding(s.key)
            rows.append(table[s.key])
        return _stack(rows)
    return _stack(_remote_embed(config, [s.text for s in sentences]))


def _check_dims(u, v):
    if u.shape != v.shape:
        raise DimensionMismatch(f"dims {u.shape[0]} and {v.shape[0]} differ")


def dot(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(u, v)
    return float(np.dot(u, v))


def cosine(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(u, v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return float(min(1.0, max(-1.0, np.dot(u, v) / (nu * nv))))


METRICS = {"dot": dot, "cosine": cosine}


def pairwise_similarity(vectors, metric="cosine"):
    """Symmetric similarity matrix, one metric call per unordered pair."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    fn = METRICS[metric]
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if not vectors:
        raise ValueError("need at least one vector")
    n = len(vectors)
    entries = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            entries[i, j] = entries[j, i] = fn(vectors[i], vectors[j])
    return SimilarityMatrix(entries)
