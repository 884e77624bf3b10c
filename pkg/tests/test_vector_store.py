"""Vector store tests.

brute_force_top_k is the independent oracle: per-pair arithmetic in plain
Python, written before the index. Every retrieval assertion below compares
against it, never against the store's own internals.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from ragkit.errors import (
    CorruptFile,
    DimensionMismatch,
    NonFiniteVector,
    VersionUnsupported,
    ZeroVector,
)
from ragkit.ingest import Chunk, DocumentMeta
from ragkit.vector_store import (
    RetrievalConfig,
    ScoredHit,
    VectorRecord,
    VectorStore,
    similarity,
)


def pair_score(metric: str, u, v) -> float:
    """Oracle similarity: plain-Python arithmetic."""
    dot = sum(a * b for a, b in zip(u, v))
    if metric == "dot":
        return dot
    if metric == "euclidean":
        return -math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


def brute_force_top_k(records, query, metric: str, k: int) -> list[str]:
    """Oracle: score every record, sort by (-score, chunk_id), take k."""
    scored = [(pair_score(metric, query, r.vector), r.chunk.chunk_id) for r in records]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [cid for _, cid in scored[:k]]


def make_record(cid: str, vector, arxiv_id: str = "2301.00001", category: str = "") -> VectorRecord:
    chunk = Chunk(
        chunk_id=cid,
        doc_id="doc",
        text=f"text-{cid}",
        start=0,
        end=9,
        meta=DocumentMeta(arxiv_id=arxiv_id, primary_category=category),
    )
    return VectorRecord.make(chunk, vector)


class TestSimilarity:
    def test_cosine_self(self):
        v = [0.3, -0.2, 0.9]
        assert similarity("cosine", v, v) == pytest.approx(1.0)

    def test_cosine_orthogonal(self):
        assert similarity("cosine", [1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_cosine_45_degrees(self):
        assert similarity("cosine", [1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            math.sqrt(2) / 2, abs=1e-12
        )

    def test_euclidean_negated(self):
        assert similarity("euclidean", [0.0, 0.0], [3.0, 4.0]) == -5.0

    def test_dot(self):
        assert similarity("dot", [1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            similarity("dot", [1.0], [1.0, 2.0])

    def test_zero_vector_cosine(self):
        with pytest.raises(ZeroVector):
            similarity("cosine", [0.0, 0.0], [1.0, 0.0])


class TestUpsert:
    def test_count_and_size(self):
        store = VectorStore(dimension=3)
        recs = [make_record(f"c{i:03d}", [1.0, 0.0, float(i)]) for i in range(100)]
        assert store.upsert(recs) == 100
        assert len(store) == 100

    def test_replace_semantics(self):
        store = VectorStore(dimension=2)
        store.upsert([make_record("c1", [1.0, 0.0])])
        store.upsert([make_record("c1", [0.0, 1.0])])
        assert len(store) == 1
        assert store.records()[0].vector == (0.0, 1.0)

    def test_nan_rejected_store_unchanged(self):
        store = VectorStore(dimension=2)
        store.upsert([make_record("c1", [1.0, 0.0])])
        with pytest.raises(NonFiniteVector):
            store.upsert([make_record("c2", [float("nan"), 1.0])])
        assert len(store) == 1

    def test_dimension_mismatch(self):
        store = VectorStore(dimension=2)
        with pytest.raises(DimensionMismatch):
            store.upsert([make_record("c1", [1.0, 0.0, 0.0])])


class TestTopK:
    def test_k_larger_than_store(self):
        store = VectorStore(dimension=2)
        store.upsert([make_record("a", [1.0, 0.0]), make_record("b", [0.0, 1.0])])
        hits = store.top_k([1.0, 0.0], RetrievalConfig(k=10))
        assert [h.record.chunk.chunk_id for h in hits] == ["a", "b"]

    def test_self_match_scores_one(self):
        store = VectorStore(dimension=3)
        store.upsert([make_record("a", [0.1, 0.5, 0.2]), make_record("b", [0.9, 0.0, 0.1])])
        hits = store.top_k([0.1, 0.5, 0.2], RetrievalConfig(k=1))
        assert hits[0].record.chunk.chunk_id == "a"
        assert hits[0].score == pytest.approx(1.0)

    def test_empty_store(self):
        store = VectorStore(dimension=2)
        assert store.top_k([1.0, 0.0], RetrievalConfig(k=5)) == []

    @pytest.mark.parametrize("metric", ["cosine", "euclidean", "dot"])
    def test_matches_brute_force_oracle(self, metric):
        rng = np.random.default_rng(7)
        dim = 32
        records = [
            make_record(f"c{i:04d}", rng.standard_normal(dim).tolist()) for i in range(1000)
        ]
        store = VectorStore(dimension=dim)
        store.upsert(records)
        for _ in range(10):
            query = rng.standard_normal(dim).tolist()
            hits = store.top_k(query, RetrievalConfig(metric=metric, k=20))
            got = [h.record.chunk.chunk_id for h in hits]
            assert got == brute_force_top_k(records, query, metric, 20)

    def test_tie_break_by_chunk_id(self):
        store = VectorStore(dimension=2)
        store.upsert(
            [
                make_record("z", [2.0, 0.0]),
                make_record("a", [1.0, 0.0]),
                make_record("m", [3.0, 0.0]),
            ]
        )
        hits = store.top_k([1.0, 0.0], RetrievalConfig(metric="cosine", k=3))
        assert [h.record.chunk.chunk_id for h in hits] == ["a", "m", "z"]

    def test_metadata_filter(self):
        store = VectorStore(dimension=2)
        store.upsert(
            [
                make_record("a", [1.0, 0.0], arxiv_id="2301.00001"),
                make_record("b", [1.0, 0.1], arxiv_id="2302.99999"),
                make_record("c", [0.9, 0.0], arxiv_id="2301.00001"),
            ]
        )
        cfg = RetrievalConfig(k=10, filter={"arxiv_id": "2301.00001"})
        hits = store.top_k([1.0, 0.0], cfg)
        assert sorted(h.record.chunk.chunk_id for h in hits) == ["a", "c"]


class TestMmr:
    def test_k_zero(self):
        store = VectorStore(dimension=2)
        store.upsert([make_record("a", [1.0, 0.0])])
        assert store.mmr_select([1.0, 0.0], RetrievalConfig(mode="mmr", k=0, fetch_k=4)) == []

    def test_lambda_one_reduces_to_top_k(self):
        rng = np.random.default_rng(11)
        dim = 8
        store = VectorStore(dimension=dim)
        store.upsert(
            [make_record(f"c{i:03d}", rng.standard_normal(dim).tolist()) for i in range(50)]
        )
        for trial in range(20):
            query = rng.standard_normal(dim).tolist()
            plain = store.top_k(query, RetrievalConfig(k=5))
            diverse = store.mmr_select(
                query, RetrievalConfig(mode="mmr", k=5, fetch_k=20, mmr_lambda=1.0)
            )
            assert [h.record.chunk.chunk_id for h in plain] == [
                h.record.chunk.chunk_id for h in diverse
            ]
            assert [h.score for h in plain] == [h.score for h in diverse]

    def test_duplicate_vectors_never_selected_twice(self):
        # a1 == a2 at 20 degrees from the query; b at -40 degrees, so b is
        # query-similar (cos40 ~ 0.766) but far from the duplicates
        # (cos60 = 0.5). Second-pick objectives at lambda=0.5:
        #   a2: 0.5*cos20 - 0.5*1.0   ~ -0.030
        #   b:  0.5*cos40 - 0.5*0.5   ~ +0.133  -> b wins.
        a = [math.cos(math.radians(20)), math.sin(math.radians(20))]
        b = [math.cos(math.radians(-40)), math.sin(math.radians(-40))]
        store = VectorStore(dimension=2)
        store.upsert(
            [make_record("a1", a), make_record("a2", a), make_record("b", b)]
        )
        cfg = RetrievalConfig(mode="mmr", k=2, fetch_k=3, mmr_lambda=0.5)
        hits = store.mmr_select([1.0, 0.0], cfg)
        ids = [h.record.chunk.chunk_id for h in hits]
        assert ids == ["a1", "b"]

    def test_three_candidate_objective_hand_computed(self):
        # Query q = (1, 0). Candidates: a=(1,0), b=(0.8,0.6), c=(0.6,0.8).
        # cos(q,a)=1, cos(q,b)=0.8, cos(q,c)=0.6 (all unit vectors).
        # lambda=0.5: pick a first, objective 0.5*1.0 = 0.5.
        # Step 2: b: 0.5*0.8 - 0.5*cos(b,a)=0.5*0.8-0.5*0.8 = 0.0
        #         c: 0.5*0.6 - 0.5*cos(c,a)=0.5*0.6-0.5*0.6 = 0.0
        #         tie at 0.0 -> ascending chunk_id picks b.
        # Step 3: c: 0.5*0.6 - 0.5*max(cos(c,a), cos(c,b))
        #         cos(c,b) = 0.48+0.48 = 0.96 -> 0.3 - 0.48 = -0.18.
        store = VectorStore(dimension=2)
        store.upsert(
            [
                make_record("a", [1.0, 0.0]),
                make_record("b", [0.8, 0.6]),
                make_record("c", [0.6, 0.8]),
            ]
        )
        cfg = RetrievalConfig(mode="mmr", k=3, fetch_k=3, mmr_lambda=0.5)
        hits = store.mmr_select([1.0, 0.0], cfg)
        assert [h.record.chunk.chunk_id for h in hits] == ["a", "b", "c"]
        assert hits[0].score == pytest.approx(0.5, abs=1e-12)
        assert hits[1].score == pytest.approx(0.0, abs=1e-12)
        assert hits[2].score == pytest.approx(-0.18, abs=1e-12)

    def test_first_pick_is_most_similar(self):
        store = VectorStore(dimension=2)
        store.upsert(
            [make_record("far", [0.0, 1.0]), make_record("near", [1.0, 0.05])]
        )
        hits = store.mmr_select(
            [1.0, 0.0], RetrievalConfig(mode="mmr", k=1, fetch_k=2, mmr_lambda=0.0)
        )
        assert hits[0].record.chunk.chunk_id == "near"


class TestPersistence:
    def _populated(self, n=100) -> VectorStore:
        rng = np.random.default_rng(3)
        store = VectorStore(dimension=8)
        store.upsert(
            [make_record(f"c{i:03d}", rng.standard_normal(8).tolist()) for i in range(n)]
        )
        return store

    def test_roundtrip_exact(self, tmp_path):
        store = self._populated()
        path = tmp_path / "store.jsonl"
        store.save(path)
        loaded = VectorStore.load(path)
        assert loaded.dimension == store.dimension
        assert loaded.records() == store.records()
        assert loaded.fingerprint() == store.fingerprint()

    def test_empty_file_is_corrupt(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(CorruptFile):
            VectorStore.load(path)

    def test_future_version_unsupported(self, tmp_path):
        path = tmp_path / "future.jsonl"
        path.write_text(
            '{"format": "ragkit-vector-store", "version": 99, "dimension": 2, "count": 0}\n'
        )
        with pytest.raises(VersionUnsupported):
            VectorStore.load(path)

    def test_garbage_record_is_corrupt(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"format": "ragkit-vector-store", "version": 1, "dimension": 2, "count": 1}\n'
            "not json\n"
        )
        with pytest.raises(CorruptFile):
            VectorStore.load(path)

    def test_wrong_format_is_corrupt(self, tmp_path):
        path = tmp_path / "other.jsonl"
        path.write_text('{"format": "something-else", "version": 1}\n')
        with pytest.raises(CorruptFile):
            VectorStore.load(path)
