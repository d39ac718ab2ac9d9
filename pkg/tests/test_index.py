import math
import random
from collections import Counter

import numpy as np
import pytest

from conftest import make_chunks, make_index, random_unit_vectors
from finqa.gateway import MockEmbedder
from finqa.index.dense import DimensionMismatch, ExactDenseIndex, HnswIndex
from finqa.index.sparse import SparseIndex, tokenize
from finqa.index.store import HybridIndex, SnapshotError


# Independent direct-formula BM25 evaluator (oracle; keep free of SparseIndex).
def bm25_oracle(corpus: dict[str, str], query: str, k1=1.2, b=0.75) -> dict[str, float]:
    docs = {cid: tokenize(text) for cid, text in corpus.items()}
    n = len(docs)
    avgdl = sum(len(t) for t in docs.values()) / n
    scores = {}
    for cid, toks in docs.items():
        tf = Counter(toks)
        s = 0.0
        for term in tokenize(query):
            n_t = sum(1 for t in docs.values() if term in t)
            if term not in tf:
                continue
            idf = math.log(1 + (n - n_t + 0.5) / (n_t + 0.5))
            f = tf[term]
            s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * len(toks) / avgdl))
        if s != 0.0:
            scores[cid] = s
    return scores


class TestTokenizer:
    def test_numeric_tokens_kept_whole(self):
        assert "45.45" in tokenize("growth [45.45 -40.13]/40.13")
        assert "23,913" in tokenize("was $23,913 for the year")

    def test_plain_words(self):
        assert tokenize("Fair Value, per-share!") == ["fair", "value", "per", "share"]


class TestSparse:
    def test_single_doc_formula(self):
        texts = ["fair value per share growth", "board of directors meeting",
                 "fair dealing policy"]
        idx = SparseIndex()
        for i, t in enumerate(texts):
            idx.add(f"c:{i}", t)
        results = idx.search("value", 10)
        assert [r.chunk_id for r in results] == ["c:0"]
        oracle = bm25_oracle({f"c:{i}": t for i, t in enumerate(texts)}, "value")
        assert results[0].score == pytest.approx(oracle["c:0"], abs=1e-9)

    def test_random_corpora_match_oracle(self):
        rng = random.Random(7)
        vocab = [f"w{i}" for i in range(30)] + ["45.45", "40.13", "2014", "2013"]
        for _ in range(25):
            n = rng.randint(2, 50)
            corpus = {
                f"c:{i}": " ".join(rng.choices(vocab, k=rng.randint(3, 40)))
                for i in range(n)
            }
            idx = SparseIndex()
            for cid, text in corpus.items():
                idx.add(cid, text)
            query = " ".join(rng.choices(vocab, k=rng.randint(1, 5)))
            got = {r.chunk_id: r.score for r in idx.search(query, n)}
            want = bm25_oracle(corpus, query)
            assert set(got) == set(want)
            for cid in want:
                assert got[cid] == pytest.approx(want[cid], abs=1e-9)

    def test_numeric_disambiguation(self):
        # near-duplicate passages differing only in year/number tokens
        idx = SparseIndex()
        idx.add("a", "amortization of contributions was 23,913 for 2014 and 22,363 for 2013")
        idx.add("b", "amortization of contributions was 27 for 2016 and 26 for 2015")
        top = idx.search("2014 45.45 23,913", 2)
        assert top[0].chunk_id == "a"

    def test_term_in_every_chunk_idf_positive(self):
        idx = SparseIndex()
        for i in range(4):
            idx.add(f"c:{i}", f"common word{i}")
        idf = idx.idf("common")
        assert idf == pytest.approx(math.log(1 + 0.5 / (4 + 0.5)))
        assert 0 < idf < 1

    def test_reupsert_replaces(self):
        idx = SparseIndex()
        idx.add("c", "unique_first_token here")
        idx.add("c", "second text entirely")
        assert idx.search("unique_first_token", 5) == []
        assert idx.search("second", 5)[0].chunk_id == "c"

    def test_remove_updates_stats(self):
        idx = SparseIndex()
        idx.add("a", "one two three")
        idx.add("b", "four five")
        assert idx.n_docs == 2
        idx.remove("a")
        assert idx.n_docs == 1
        assert idx.avgdl == 2.0
        assert idx.search("one", 5) == []

    def test_no_indexed_terms(self):
        idx = SparseIndex()
        idx.add("a", "alpha")
        assert idx.search("missing", 5) == []

    def test_tie_break_by_chunk_id(self):
        idx = SparseIndex()
        idx.add("b", "same text")
        idx.add("a", "same text")
        results = idx.search("same", 5)
        assert [r.chunk_id for r in results] == ["a", "b"]


class TestExactDense:
    def test_self_similarity(self):
        rng = np.random.default_rng(0)
        vecs = random_unit_vectors(rng, 20, 16)
        idx = ExactDenseIndex(16)
        for i, v in enumerate(vecs):
            idx.add(f"c:{i}", v)
        top = idx.search(vecs[7], 1)
        assert top[0].chunk_id == "c:7"
        assert top[0].score == pytest.approx(1.0, abs=1e-6)

    def test_k_saturation(self):
        rng = np.random.default_rng(1)
        vecs = random_unit_vectors(rng, 5, 8)
        idx = ExactDenseIndex(8)
        for i, v in enumerate(vecs):
            idx.add(f"c:{i}", v)
        assert len(idx.search(vecs[0], 50)) == 5

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        vecs = random_unit_vectors(rng, 100, 24)
        idx = ExactDenseIndex(24)
        for i, v in enumerate(vecs):
            idx.add(f"c:{i:03d}", v)
        q = random_unit_vectors(rng, 1, 24)[0]
        got = [c.chunk_id for c in idx.search(q, 10)]
        sims = vecs @ q
        want = [f"c:{i:03d}" for i in
                sorted(range(100), key=lambda i: (-sims[i], f"c:{i:03d}"))[:10]]
        assert got == want

    def test_dimension_mismatch(self):
        idx = ExactDenseIndex(8)
        with pytest.raises(DimensionMismatch):
            idx.add("c", np.ones(4))

    def test_empty_index(self):
        assert ExactDenseIndex(8).search(np.ones(8) / math.sqrt(8), 3) == []


class TestHnsw:
    def test_recall_at_10(self):
        rng = np.random.default_rng(42)
        vecs = random_unit_vectors(rng, 1000, 64)
        exact = ExactDenseIndex(64)
        hnsw = HnswIndex(64, m=16, ef_construction=200, ef_search=64)
        for i, v in enumerate(vecs):
            exact.add(f"c:{i:04d}", v)
            hnsw.add(f"c:{i:04d}", v)
        queries = random_unit_vectors(rng, 50, 64)
        hit = total = 0
        for q in queries:
            truth = {c.chunk_id for c in exact.search(q, 10)}
            approx = {c.chunk_id for c in hnsw.search(q, 10)}
            hit += len(truth & approx)
            total += 10
        assert hit / total >= 0.95

    def test_soft_delete_then_search(self):
        rng = np.random.default_rng(3)
        vecs = random_unit_vectors(rng, 60, 16)
        hnsw = HnswIndex(16, m=8, ef_construction=64, ef_search=32)
        for i, v in enumerate(vecs):
            hnsw.add(f"c:{i}", v)
        for i in range(0, 30):
            hnsw.remove(f"c:{i}")
        assert len(hnsw) == 30
        for q in random_unit_vectors(rng, 5, 16):
            got = {c.chunk_id for c in hnsw.search(q, 10)}
            assert all(int(cid.split(":")[1]) >= 30 for cid in got)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        vecs = random_unit_vectors(rng, 50, 8)

        def build():
            h = HnswIndex(8, m=8)
            for i, v in enumerate(vecs):
                h.add(f"c:{i}", v)
            return h

        q = random_unit_vectors(rng, 1, 8)[0]
        assert build().search(q, 5) == build().search(q, 5)


class TestHybridStore:
    def test_empty_upsert(self):
        idx = HybridIndex(dim=64)
        assert idx.upsert_chunks([], np.zeros((0, 64))) == 0
        assert len(idx) == 0

    def test_self_search_rank_one(self, embedder):
        idx = make_index(["unique alpha text", "different beta text"])
        q = embedder.embed(["unique alpha text"])[0]
        top = idx.dense_search(q, 1)
        assert top[0].chunk_id == "doc:0"
        assert top[0].score == pytest.approx(1.0, abs=1e-6)

    def test_dimension_mismatch_atomic(self):
        idx = HybridIndex(dim=64)
        chunks = make_chunks(["a", "b"])
        with pytest.raises(DimensionMismatch):
            idx.upsert_chunks(chunks, np.ones((2, 32)))
        assert len(idx) == 0

    def test_remove_document(self, embedder):
        idx = HybridIndex(dim=64)
        for d in ("d1", "d2", "d3"):
            texts = [f"{d} text number {i} tokenof{d}" for i in range(3)]
            idx.upsert_chunks(make_chunks(texts, d), embedder.embed(texts))
        assert idx.remove_document("d2") == 3
        assert idx.sparse_search("tokenofd2", 10) == []
        assert idx.sparse.n_docs == 6
        assert idx.remove_document("nope") == 0

    def test_persist_round_trip(self, tmp_path, embedder):
        idx = make_index(["alpha beta", "gamma delta", "epsilon zeta"])
        path = tmp_path / "snap.zip"
        idx.persist(path)
        loaded = HybridIndex.load(path)
        q = embedder.embed(["alpha beta"])[0]
        assert loaded.dense_search(q, 3) == idx.dense_search(q, 3)
        assert loaded.sparse_search("gamma", 3) == idx.sparse_search("gamma", 3)

    def test_persist_empty(self, tmp_path):
        idx = HybridIndex(dim=64)
        path = tmp_path / "empty.zip"
        idx.persist(path)
        assert len(HybridIndex.load(path)) == 0

    def test_corrupted_snapshot(self, tmp_path):
        import zipfile

        idx = make_index(["alpha"])
        path = tmp_path / "snap.zip"
        idx.persist(path)
        with zipfile.ZipFile(path) as zf:
            members = {n: zf.read(n) for n in zf.namelist()}
        vec = bytearray(members["vectors.npy"])
        vec[-1] ^= 0xFF  # tamper payload, keep original meta checksum
        members["vectors.npy"] = bytes(vec)
        with zipfile.ZipFile(path, "w") as zf:
            for name, data in members.items():
                zf.writestr(name, data)
        with pytest.raises(SnapshotError, match="checksum"):
            HybridIndex.load(path)

    def test_not_a_zip(self, tmp_path):
        path = tmp_path / "junk.zip"
        path.write_bytes(b"not a snapshot at all")
        with pytest.raises(SnapshotError):
            HybridIndex.load(path)

    def test_random_interleavings_no_ghost_results(self, embedder):
        rng = random.Random(99)
        idx = HybridIndex(dim=64)
        live: dict[str, list[str]] = {}
        for step in range(300):
            op = rng.random()
            if op < 0.5:
                d = f"d{rng.randint(0, 9)}"
                texts = [f"{d} body text {i} markerof{d}" for i in range(rng.randint(1, 3))]
                idx.remove_document(d)
                idx.upsert_chunks(make_chunks(texts, d), embedder.embed(texts))
                live[d] = texts
            elif op < 0.75 and live:
                d = rng.choice(sorted(live))
                idx.remove_document(d)
                del live[d]
            else:
                d = f"d{rng.randint(0, 9)}"
                hits = idx.sparse_search(f"markerof{d}", 20)
                for h in hits:
                    assert h.chunk_id.split(":")[0] in live
                if len(idx):
                    q = embedder.embed([f"{d} body text"])[0]
                    for h in idx.dense_search(q, 10):
                        assert h.chunk_id.split(":")[0] in live
