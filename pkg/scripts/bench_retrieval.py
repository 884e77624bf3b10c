"""Retrieval latency benchmark for the flat index.

Exactness is tested elsewhere; this script only measures how the linear
scan and MMR behave as the store grows.

    python3 scripts/bench_retrieval.py [--dim 1536] [--sizes 1000,5000,10000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ragkit.ingest import Chunk, DocumentMeta
from ragkit.vector_store import RetrievalConfig, VectorRecord, VectorStore


def build_store(n: int, dim: int, rng) -> VectorStore:
    store = VectorStore(dimension=dim)
    meta = DocumentMeta(arxiv_id="2301.00001")
    records = [
        VectorRecord.make(
            Chunk(chunk_id=f"c{i:06d}", doc_id="bench", text="x", start=0, end=1, meta=meta),
            rng.standard_normal(dim),
        )
        for i in range(n)
    ]
    store.upsert(records)
    return store


def timed(fn, queries) -> tuple[float, float]:
    times = []
    for q in queries:
        t0 = time.perf_counter()
        fn(q)
        times.append((time.perf_counter() - t0) * 1000.0)
    arr = np.array(times)
    return float(np.percentile(arr, 50)), float(np.percentile(arr, 95))


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--dim", type=int, default=1536)
    parser.add_argument("--sizes", default="1000,5000,10000")
    parser.add_argument("--queries", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>7}  {'top20 p50':>10}  {'top20 p95':>10}  {'mmr p50':>10}  {'mmr p95':>10}")
    for n in sizes:
        store = build_store(n, args.dim, rng)
        queries = [rng.standard_normal(args.dim) for _ in range(args.queries)]
        plain = RetrievalConfig(metric="cosine", k=20)
        mmr = RetrievalConfig(metric="cosine", mode="mmr", k=20, fetch_k=80)
        p50, p95 = timed(lambda q: store.top_k(q, plain), queries)
        m50, m95 = timed(lambda q: store.mmr_select(q, mmr), queries)
        print(f"{n:>7}  {p50:>9.2f}ms  {p95:>9.2f}ms  {m50:>9.2f}ms  {m95:>9.2f}ms")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
