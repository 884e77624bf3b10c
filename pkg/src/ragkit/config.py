"""Application configuration: one JSON file covering store paths, endpoint
settings, retrieval defaults, and retention, shared by the CLI and the
HTTP service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import EmbeddingConfig
from .ingest import ChunkConfig
from .llm import LlmConfig
from .tracing import RetentionPolicy
from .vector_store import RetrievalConfig


@dataclass
class AppConfig:
    data_dir: Path = Path(".ragkit")
    store_path: Path | None = None
    templates_dir: Path | None = None  # None -> packaged defaults
    traces_dir: Path | None = None
    datasets_dir: Path | None = None
    reports_dir: Path | None = None
    manifest_path: Path | None = None
    chunking: ChunkConfig = field(default_factory=ChunkConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    judge: LlmConfig | None = None
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    retention: RetentionPolicy = field(default_factory=RetentionPolicy)
    full_capture: bool = False
    auth_token: str | None = None

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.store_path is None:
            self.store_path = self.data_dir / "store.jsonl"
        if self.traces_dir is None:
            self.traces_dir = self.data_dir / "traces"
        if self.datasets_dir is None:
            self.datasets_dir = self.data_dir / "datasets"
        if self.reports_dir is None:
            self.reports_dir = self.data_dir / "reports"
        if self.judge is None:
            self.judge = self.llm

    @classmethod
    def from_dict(cls, raw: dict) -> "AppConfig":
        kwargs: dict = {}
        for key in ("data_dir", "store_path", "templates_dir", "traces_dir",
                    "datasets_dir", "reports_dir", "manifest_path"):
            if raw.get(key) is not None:
                kwargs[key] = Path(raw[key])
        if "chunking" in raw:
            c = raw["chunking"]
            kwargs["chunking"] = ChunkConfig(
                chunk_size=c.get("chunk_size", 120),
                overlap=c.get("overlap", 10),
                separators=tuple(c.get("separators", ChunkConfig().separators)),
            )
        if "embedding" in raw:
            kwargs["embedding"] = EmbeddingConfig(**raw["embedding"])
        if "llm" in raw:
            kwargs["llm"] = LlmConfig(**raw["llm"])
        if "judge" in raw:
            kwargs["judge"] = LlmConfig(**raw["judge"])
        if "retrieval" in raw:
            kwargs["retrieval"] = RetrievalConfig.from_dict(raw["retrieval"])
        if "retention" in raw:
            kwargs["retention"] = RetentionPolicy(**raw["retention"])
        for key in ("full_capture", "auth_token"):
            if key in raw:
                kwargs[key] = raw[key]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
