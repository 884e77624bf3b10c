"""Exact flat vector index with cosine / euclidean / dot-product retrieval
and optional maximal-marginal-relevance reranking.

Linear scan, no approximation: the corpus is small enough that exactness
is cheap and every retrieval test can be an equality test. Scores are
oriented so larger is always better (euclidean is returned negated).
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import CorruptFile, DimensionMismatch, NonFiniteVector, VersionUnsupported, ZeroVector
from .ingest import Chunk

FORMAT_NAME = "ragkit-vector-store"
FORMAT_VERSION = 1

METRICS = ("cosine", "euclidean", "dot")
MODES = ("plain_topk", "mmr")


@dataclass(frozen=True)
class VectorRecord:
    chunk: Chunk
    vector: tuple[float, ...]

    @classmethod
    def make(cls, chunk: Chunk, vector: Sequence[float]) -> "VectorRecord":
        return cls(chunk=chunk, vector=tuple(float(x) for x in vector))


@dataclass(frozen=True)
class RetrievalConfig:
    metric: str = "cosine"
    mode: str = "plain_topk"
    k: int = 20
    fetch_k: int | None = None  # defaults to 4*k for mmr
    mmr_lambda: float = 0.5
    filter: dict[str, str] | None = None  # equality on arxiv_id / primary_category

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("mmr_lambda must be in [0, 1]")
        if self.mode == "mmr" and self.effective_fetch_k < self.k:
            raise ValueError("fetch_k must be >= k for mmr")

    @property
    def effective_fetch_k(self) -> int:
        return self.fetch_k if self.fetch_k is not None else 4 * self.k

    def snapshot(self) -> dict:
        return {
            "metric": self.metric,
            "mode": self.mode,
            "k": self.k,
            "fetch_k": self.effective_fetch_k if self.mode == "mmr" else None,
            "mmr_lambda": self.mmr_lambda,
            "filter": dict(self.filter) if self.filter else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RetrievalConfig":
        return cls(
            metric=d.get("metric", "cosine"),
            mode=d.get("mode", "plain_topk"),
            k=int(d.get("k", 20)),
            fetch_k=d.get("fetch_k"),
            mmr_lambda=float(d.get("mmr_lambda", 0.5)),
            filter=d.get("filter"),
        )


@dataclass(frozen=True)
class ScoredHit:
    record: VectorRecord
    score: float


def _as_array(v: Sequence[float]) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch("vector must be one-dimensional")
    return arr


def similarity(metric: str, u: Sequence[float], v: Sequence[float]) -> float:
    """Pairwise similarity; euclidean returns the negated distance so that
    larger is better under every metric."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    a, b = _as_array(u), _as_array(v)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    if metric == "dot":
        return float(a @ b)
    if metric == "euclidean":
        return -float(np.linalg.norm(a - b))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(a @ b / (na * nb))


class VectorStore:
    """In-memory flat index keyed by chunk_id, with JSONL persistence.

    Thread contract: mutations and queries serialize on one lock; readers
    never observe a partially applied upsert.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self._records: dict[str, VectorRecord] = {}
        self._lock = threading.RLock()
        self._matrix: np.ndarray | None = None
        self._order: list[str] = []

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[VectorRecord]:
        with self._lock:
            return [self._records[cid] for cid in sorted(self._records)]

    def upsert(self, records: Sequence[VectorRecord]) -> int:
        """Store records; an existing chunk_id is replaced. Returns the
        number of records written."""
        staged = {}
        for rec in records:
            arr = _as_array(rec.vector)
            if arr.shape[0] != self.dimension:
                raise DimensionMismatch(
                    f"record {rec.chunk.chunk_id} has dimension {arr.shape[0]}, "
                    f"store expects {self.dimension}"
                )
            if not np.all(np.isfinite(arr)):
                raise NonFiniteVector(f"record {rec.chunk.chunk_id} has non-finite entries")
            staged[rec.chunk.chunk_id] = rec
        with self._lock:
            self._records.update(staged)
            self._matrix = None
        return len(records)

    def _scan(
        self, query: np.ndarray, metric: str, predicate: Callable[[VectorRecord], bool]
    ) -> list[tuple[float, str, VectorRecord]]:
        with self._lock:
            if self._matrix is None:
                self._order = sorted(self._records)
                self._matrix = (
                    np.stack([self._records[cid].vector for cid in self._order])
                    if self._order
                    else np.zeros((0, self.dimension))
                )
            order, matrix = self._order, self._matrix
            records = dict(self._records)
        if not order:
            return []
        if metric == "dot":
            scores = matrix @ query
        elif metric == "euclidean":
            scores = -np.linalg.norm(matrix - query, axis=1)
        else:
            qn = np.linalg.norm(query)
            if qn == 0.0:
                raise ZeroVector("cosine similarity undefined for zero query")
            norms = np.linalg.norm(matrix, axis=1)
            if np.any(norms == 0.0):
                raise ZeroVector("store contains a zero vector; cosine undefined")
            scores = (matrix @ query) / (norms * qn)
        out = []
        for cid, score in zip(order, scores):
            rec = records[cid]
            if predicate(rec):
                out.append((float(score), cid, rec))
        return out

    @staticmethod
    def _predicate(cfg: RetrievalConfig) -> Callable[[VectorRecord], bool]:
        if not cfg.filter:
            return lambda rec: True
        wanted = dict(cfg.filter)

        def pred(rec: VectorRecord) -> bool:
            meta = rec.chunk.meta
            for key, value in wanted.items():
                if key == "arxiv_id" and meta.arxiv_id != value:
                    return False
                if key == "primary_category" and meta.primary_category != value:
                    return False
            return True

        return pred

    def _query_array(self, query: Sequence[float]) -> np.ndarray:
        arr = _as_array(query)
        if arr.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"query dimension {arr.shape[0]}, store expects {self.dimension}"
            )
        return arr

    def top_k(self, query: Sequence[float], cfg: RetrievalConfig) -> list[ScoredHit]:
        """Exact top-k by the configured metric; ties break on ascending
        chunk_id so results are fully deterministic."""
        arr = self._query_array(query)
        scored = self._scan(arr, cfg.metric, self._predicate(cfg))
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [ScoredHit(record=rec, score=score) for score, _, rec in scored[: cfg.k]]

    def mmr_select(self, query: Sequence[float], cfg: RetrievalConfig) -> list[ScoredHit]:
        """Greedy maximal-marginal-relevance selection over the plain top
        fetch_k candidate pool.

        Each step picks argmax of lambda*sim(query, d) - (1-lambda)*max over
        selected s of sim(d, s); the first pick is the most query-similar
        candidate. Hit scores are the objective values at selection time.
        """
        if cfg.k == 0:
            return []
        arr = self._query_array(query)
        pool_cfg = RetrievalConfig(metric=cfg.metric, k=cfg.effective_fetch_k, filter=cfg.filter)
        pool = self.top_k(arr, pool_cfg)
        if not pool:
            return []
        lam = cfg.mmr_lambda
        candidates = list(range(len(pool)))
        query_sims = [hit.score for hit in pool]
        vectors = [np.asarray(hit.record.vector, dtype=np.float64) for hit in pool]
        selected: list[int] = []
        hits: list[ScoredHit] = []
        max_sim_to_selected = [float("-inf")] * len(pool)
        while candidates and len(selected) < cfg.k:
            if not selected:
                # First pick is the most query-similar candidate regardless
                # of lambda; the pool is already (sim desc, chunk_id asc).
                best_idx, best_obj = 0, lam * query_sims[0]
            else:
                best_idx, best_obj = None, float("-inf")
                for idx in candidates:
                    obj = lam * query_sims[idx] - (1.0 - lam) * max_sim_to_selected[idx]
                    if (
                        best_idx is None
                        or obj > best_obj
                        or (obj == best_obj and pool[idx].record.chunk.chunk_id
                            < pool[best_idx].record.chunk.chunk_id)
                    ):
                        best_idx, best_obj = idx, obj
            selected.append(best_idx)
            candidates.remove(best_idx)
            hits.append(ScoredHit(record=pool[best_idx].record, score=best_obj))
            for idx in candidates:
                pairwise = similarity(cfg.metric, vectors[idx], vectors[best_idx])
                if pairwise > max_sim_to_selected[idx]:
                    max_sim_to_selected[idx] = pairwise
        return hits

    def search(self, query: Sequence[float], cfg: RetrievalConfig) -> list[ScoredHit]:
        if cfg.mode == "mmr":
            return self.mmr_select(query, cfg)
        return self.top_k(query, cfg)

    def fingerprint(self) -> str:
        """Content hash over the record set; stable across processes."""
        h = hashlib.sha256()
        for rec in self.records():
            h.update(rec.chunk.chunk_id.encode("utf-8"))
            h.update(np.asarray(rec.vector, dtype=np.float64).tobytes())
        return h.hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        header = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "dimension": self.dimension,
            "count": len(self),
        }
        with self._lock:
            rows = [
                {"chunk": rec.chunk.to_dict(), "vector": list(rec.vector)}
                for rec in self.records()
            ]
        tmp = Path(str(path) + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CorruptFile(f"cannot read {path}: {exc}") from exc
        lines = text.splitlines()
        if not lines or not lines[0].strip():
            raise CorruptFile(f"{path} is empty")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise CorruptFile(f"{path}: bad header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
            raise CorruptFile(f"{path}: not a {FORMAT_NAME} file")
        version = header.get("version")
        if not isinstance(version, int) or version < 1:
            raise CorruptFile(f"{path}: bad version field {version!r}")
        if version > FORMAT_VERSION:
            raise VersionUnsupported(
                f"{path}: version {version} newer than supported {FORMAT_VERSION}"
            )
        store = cls(dimension=int(header["dimension"]))
        records = []
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                records.append(
                    VectorRecord(chunk=Chunk.from_dict(row["chunk"]), vector=tuple(row["vector"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorruptFile(f"{path}: bad record on line {i}: {exc}") from exc
        store.upsert(records)
        return store
