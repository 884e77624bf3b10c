"""Chunk text to fixed-dimension vectors.

Two backends: ``remote`` speaks the standard embeddings HTTP contract
(POST model + input array, bearer token from the environment), and
``deterministic`` is a pure local function so the whole test suite runs
with zero network access.
"""

from __future__ import annotations

import hashlib
import os
import random
import time
from dataclasses import dataclass

import httpx
import numpy as np

from .errors import AuthMissing, DimensionMismatch, RemoteUnavailable

Vector = list[float]


@dataclass(frozen=True)
class EmbeddingConfig:
    backend: str = "deterministic"  # "deterministic" | "remote"
    model_name: str = "text-embedding-ada-002"
    dimension: int = 1536
    endpoint_base_url: str = "https://api.openai.com/v1"
    api_key_ref: str = "OPENAI_API_KEY"
    batch_size: int = 64
    timeout: float = 30.0
    max_retries: int = 3

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.backend not in ("deterministic", "remote"):
            raise ValueError(f"unknown embedding backend {self.backend!r}")

    def snapshot(self) -> dict:
        return {
            "backend": self.backend,
            "model_name": self.model_name,
            "dimension": self.dimension,
            "endpoint_base_url": self.endpoint_base_url,
            "api_key_ref": self.api_key_ref,
        }


def _bucket(trigram: str, dimension: int) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


def deterministic_embed(text: str, dimension: int) -> Vector:
    """Hashed character-trigram bag projected into `dimension` buckets,
    L2-normalized. Texts shorter than one trigram map to the unit basis
    vector on axis 0. Pure function of (text, dimension), stable across
    processes (no salted hashing)."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    counts = np.zeros(dimension, dtype=np.float64)
    if len(text) < 3:
        counts[0] = 1.0
        return counts.tolist()
    for i in range(len(text) - 2):
        counts[_bucket(text[i : i + 3], dimension)] += 1.0
    counts /= np.linalg.norm(counts)
    return counts.tolist()


def _post_with_retries(
    url: str,
    payload: dict,
    headers: dict,
    cfg: EmbeddingConfig,
    transport: httpx.BaseTransport | None,
    rng: random.Random,
) -> dict:
    last_error: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(min(2.0, 0.2 * 2 ** (attempt - 1)) + rng.uniform(0, 0.05))
        try:
            with httpx.Client(transport=transport, timeout=cfg.timeout) as client:
                resp = client.post(url, json=payload, headers=headers)
            if resp.status_code == 200:
                return resp.json()
            last_error = RemoteUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if 400 <= resp.status_code < 500 and resp.status_code != 429:
                break  # caller fault; retrying will not help
        except httpx.HTTPError as exc:
            last_error = exc
    raise RemoteUnavailable(f"embeddings endpoint failed after retries: {last_error}")


def _remote_embed_batch(
    texts: list[str],
    cfg: EmbeddingConfig,
    transport: httpx.BaseTransport | None,
) -> list[Vector]:
    api_key = os.environ.get(cfg.api_key_ref, "")
    if not api_key:
        raise AuthMissing(f"environment variable {cfg.api_key_ref} is not set")
    headers = {"Authorization": f"Bearer {api_key}"}
    url = cfg.endpoint_base_url.rstrip("/") + "/embeddings"
    rng = random.Random()
    vectors: list[Vector] = []
    for at in range(0, len(texts), cfg.batch_size):
        batch = texts[at : at + cfg.batch_size]
        body = _post_with_retries(
            url, {"model": cfg.model_name, "input": batch}, headers, cfg, transport, rng
        )
        rows = sorted(body["data"], key=lambda r: r["index"])
        if len(rows) != len(batch):
            raise DimensionMismatch(
                f"endpoint returned {len(rows)} vectors for {len(batch)} inputs"
            )
        for row in rows:
            vec = [float(x) for x in row["embedding"]]
            if len(vec) != cfg.dimension:
                raise DimensionMismatch(
                    f"endpoint returned dimension {len(vec)}, expected {cfg.dimension}"
                )
            vectors.append(vec)
    return vectors


def embed_batch(
    texts: list[str],
    cfg: EmbeddingConfig,
    transport: httpx.BaseTransport | None = None,
) -> list[Vector]:
    """Embed texts in input order; output length equals input length.

    `transport` lets tests exercise the remote wire protocol without a
    network (httpx.MockTransport).
    """
    if not texts:
        return []
    if cfg.backend == "deterministic":
        return [deterministic_embed(t, cfg.dimension) for t in texts]
    return _remote_embed_batch(list(texts), cfg, transport)
