import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from divsumm.corpus import Sentence
from divsumm.embed import (EmbeddingBackendConfig, cosine, dot, embed_batch, fnv1a64,
                           hashed_tfidf_embed, load_embedding_file, pairwise_similarity,
                           term_slot, tokenize)
from divsumm.errors import (DimensionMismatch, DuplicateKey, MissingEmbedding, ParseError,
                            RemoteError, ZeroVector)


def sents(*texts, doc="d"):
    return [Sentence(doc, i, i, t) for i, t in enumerate(texts)]


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


class TestHashing:
    def test_fnv1a_reference_values(self):
        # published FNV-1a 64 test vectors
        assert fnv1a64("") == 0xCBF29CE484222325
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C
        assert fnv1a64("foobar") == 0x85944171F73967E8

    def test_slot_stable(self):
        assert term_slot("toll", 1024) == term_slot("toll", 1024)
        bucket, sign = term_slot("toll", 64)
        assert 0 <= bucket < 64 and sign in (1.0, -1.0)

    def test_tokenize(self):
        assert tokenize("The U.S. toll, $6!") == ["the", "u", "s", "toll", "6"]


class TestHashedTfidf:
    def test_single_sentence_idf_is_ln2(self):
        raw = hashed_tfidf_embed(sents("alpha beta beta"), 4096, normalize=False)[0]
        (ba, sa), (bb, sb) = term_slot("alpha", 4096), term_slot("beta", 4096)
        assert ba != bb
        assert raw[ba] == pytest.approx(sa * 1 * math.log(2), rel=1e-15)
        assert raw[bb] == pytest.approx(sb * 2 * math.log(2), rel=1e-15)
        vec = hashed_tfidf_embed(sents("alpha beta beta"), 4096)[0]
        assert vec[bb] / vec[ba] == pytest.approx(2 * sb / sa)

    def test_idf_weights_terms(self):
        # "common" appears in both sentences (idf ln 2), "rare" in one (idf ln 3)
        vec = hashed_tfidf_embed(sents("common rare", "common"), 4096)[0]
        bc, sc = term_slot("common", 4096)
        br, sr = term_slot("rare", 4096)
        assert bc != br
        ratio = abs(vec[br]) / abs(vec[bc])
        assert ratio == pytest.approx(math.log(3) / math.log(2), rel=1e-12)

    def test_identical_sentences_identical_vectors(self):
        out = hashed_tfidf_embed(sents("same words here", "same words here"), 256)
        assert np.array_equal(out[0], out[1])
        assert cosine(out[0], out[1]) == pytest.approx(1.0, abs=1e-9)

    @given(st.text(min_size=0, max_size=80), st.sampled_from([8, 64, 1024]))
    def test_unit_norm(self, text, dim):
        vec = hashed_tfidf_embed(sents(text), dim)[0]
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.isfinite(vec))

    def test_disjoint_vocabulary_orthogonal(self):
        a, b = "river bridge toll", "school phone ban"
        buckets_a = {term_slot(t, 4096)[0] for t in tokenize(a)}
        buckets_b = {term_slot(t, 4096)[0] for t in tokenize(b)}
        assert buckets_a.isdisjoint(buckets_b)  # precondition of the example
        out = hashed_tfidf_embed(sents(a, b), 4096)
        assert cosine(out[0], out[1]) == pytest.approx(0.0, abs=1e-9)

    def test_permutation_covariant(self):
        texts = ["a b c", "b c d", "the toll rises", "c c a"]
        base = hashed_tfidf_embed(sents(*texts), 128)
        perm = [2, 0, 3, 1]
        permuted = hashed_tfidf_embed(sents(*[texts[p] for p in perm]), 128)
        assert np.array_equal(permuted, base[perm])

    def test_rejects_small_dim(self):
        with pytest.raises(ValueError):
            hashed_tfidf_embed(sents("x"), 4)


class TestVectorOps:
    def test_dot_examples(self):
        assert dot([1, 0], [0, 1]) == 0
        assert dot([1, 2], [3, 4]) == 11
        u = np.array([0.6, 0.8])
        assert dot(u, u) == pytest.approx(1.0, abs=1e-9)

    def test_dot_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            dot([1, 2], [1, 2, 3])

    def test_cosine_examples(self):
        assert cosine([1, 2], [2, 4]) == pytest.approx(1.0)
        assert cosine([1, 2], [-1, -2]) == pytest.approx(-1.0)
        with pytest.raises(ZeroVector):
            cosine([0, 0], [1, 0])

    @given(arrays(float, 5, elements=finite), arrays(float, 5, elements=finite),
           st.floats(min_value=1e-3, max_value=1e3))
    def test_cosine_scale_invariant(self, u, v, alpha):
        if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
            return
        assert cosine(alpha * u, v) == pytest.approx(cosine(u, v), abs=1e-9)
        assert -1.0 <= cosine(u, v) <= 1.0


class TestPairwise:
    def test_single_vector(self):
        m = pairwise_similarity([np.array([3.0, 4.0])], "dot")
        assert m.n == 1 and m[0, 0] == 25.0

    def test_orthonormal_identity(self):
        m = pairwise_similarity(list(np.eye(3)), "cosine")
        assert np.array_equal(m.entries, np.eye(3))

    @settings(max_examples=50)
    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10_000))
    def test_symmetric_with_unit_diagonal(self, n, seed):
        vs = np.random.default_rng(seed).normal(size=(n, 6))
        for metric in ("dot", "cosine"):
            m = pairwise_similarity(vs, metric).entries
            assert np.array_equal(m, m.T)
            assert np.all(np.isfinite(m))
        cos = pairwise_similarity(vs, "cosine").entries
        assert np.allclose(np.diag(cos), 1.0, atol=1e-9)
        assert np.all(np.abs(cos) <= 1.0)

    def test_submatrix(self):
        m = pairwise_similarity(list(np.eye(4)), "dot").sub([3, 1])
        assert np.array_equal(m.entries, np.eye(2))


def _write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


class TestEmbeddingFile:
    def test_round_trip(self, tmp_path):
        p = _write_jsonl(tmp_path / "e.jsonl", [{"key": "d#0", "vector": [1, 0]},
                                                {"key": "d#1", "vector": [0.5, 0.5]}])
        table = load_embedding_file(p)
        assert set(table) == {"d#0", "d#1"}
        out = embed_batch(EmbeddingBackendConfig(kind="file", path=str(p)), sents("x", "y"))
        assert np.array_equal(out, [[1, 0], [0.5, 0.5]])

    def test_missing_key(self, tmp_path):
        p = _write_jsonl(tmp_path / "e.jsonl", [{"key": "d#0", "vector": [1, 0]}])
        with pytest.raises(MissingEmbedding, match="d#1"):
            embed_batch(EmbeddingBackendConfig(kind="file", path=str(p)), sents("x", "y"))

    def test_parse_error_line_number(self, tmp_path):
        p = tmp_path / "e.jsonl"
        p.write_text('{"key": "a#0", "vector": [1]}\n{not json\n')
        with pytest.raises(ParseError) as err:
            load_embedding_file(p)
        assert err.value.line == 2

    def test_non_numeric_vector(self, tmp_path):
        p = _write_jsonl(tmp_path / "e.jsonl", [{"key": "a#0", "vector": ["x"]}])
        with pytest.raises(ParseError):
            load_embedding_file(p)

    def test_duplicate_key(self, tmp_path):
        p = _write_jsonl(tmp_path / "e.jsonl", [{"key": "a#0", "vector": [1]},
                                                {"key": "a#0", "vector": [2]}])
        with pytest.raises(DuplicateKey, match="a#0"):
            load_embedding_file(p)

    def test_inconsistent_dims(self, tmp_path):
        p = _write_jsonl(tmp_path / "e.jsonl", [{"key": "a#0", "vector": [1]},
                                                {"key": "a#1", "vector": [2, 3]}])
        with pytest.raises(DimensionMismatch):
            load_embedding_file(p)


class TestBackendConfig:
    def test_fields_per_kind(self):
        EmbeddingBackendConfig(kind="hashed_tfidf", dim=64)
        with pytest.raises(ValueError):
            EmbeddingBackendConfig(kind="hashed_tfidf", dim=64, path="x")
        with pytest.raises(ValueError):
            EmbeddingBackendConfig(kind="file")
        with pytest.raises(ValueError):
            EmbeddingBackendConfig(kind="bert", dim=8)

    def test_batch_is_pure(self):
        cfg = EmbeddingBackendConfig(kind="hashed_tfidf", dim=64)
        data = sents("one fish", "two fish", "red fish")
        assert np.array_equal(embed_batch(cfg, data), embed_batch(cfg, data))


class TestRemote:
    def test_protocol(self, fake_service):
        fake_service.reply_with(
            lambda path, body: (200, {"vectors": [[len(t), 1.0] for t in body["texts"]]}))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        out = embed_batch(cfg, sents("ab", "abcd"))
        assert np.array_equal(out, [[2, 1], [4, 1]])
        assert fake_service.requests == [("/embed", {"texts": ["ab", "abcd"]})]

    def test_non_200(self, fake_service):
        fake_service.reply_with(lambda path, body: (503, {"error": "overloaded"}))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        with pytest.raises(RemoteError) as err:
            embed_batch(cfg, sents("x"))
        assert err.value.status == 503 and "overloaded" in err.value.body

    def test_malformed_body(self, fake_service):
        fake_service.reply_with(lambda path, body: (200, b"not json"))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        with pytest.raises(RemoteError):
            embed_batch(cfg, sents("x"))

    def test_wrong_vector_count(self, fake_service):
        fake_service.reply_with(lambda path, body: (200, {"vectors": [[1.0]]}))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        with pytest.raises(RemoteError):
            embed_batch(cfg, sents("x", "y"))

    def test_inconsistent_dims(self, fake_service):
        fake_service.reply_with(lambda path, body: (200, {"vectors": [[1.0], [1.0, 2.0]]}))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        with pytest.raises(DimensionMismatch):
            embed_batch(cfg, sents("x", "y"))

    def test_unreachable(self):
        cfg = EmbeddingBackendConfig(kind="remote", endpoint="http://127.0.0.1:9", timeout_s=1)
        with pytest.raises(RemoteError):
            embed_batch(cfg, sents("x"))

    def test_timeout_env_override(self, monkeypatch):
        from divsumm.embed import remote_timeout
        cfg = EmbeddingBackendConfig(kind="remote", endpoint="http://x", timeout_s=5)
        assert remote_timeout(cfg) == 5
        assert remote_timeout(None) == 30.0
        monkeypatch.setenv("SUMM_REMOTE_TIMEOUT_MS", "1500")
        assert remote_timeout(cfg) == 1.5

    def test_concurrent_calls(self, fake_service):
        fake_service.reply_with(
            lambda path, body: (200, {"vectors": [[float(len(t))] for t in body["texts"]]}))
        cfg = EmbeddingBackendConfig(kind="remote", endpoint=fake_service.url)
        with ThreadPoolExecutor(4) as pool:
            outs = list(pool.map(lambda i: embed_batch(cfg, sents("x" * (i + 1))), range(8)))
        assert [o[0, 0] for o in outs] == [float(i + 1) for i in range(8)]
