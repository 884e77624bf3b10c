"""Durable chain traces: append-only active log plus an archive.

Every chat chain writes one trace record before its response is returned.
A retention sweep moves records older than the policy's active window into
the archive file; archived traces stay fetchable, nothing is ever deleted.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

Clock = Callable[[], float]

PREVIEW_CHARS = 160


def digest_payload(payload: str, full_capture: bool = False) -> dict:
    """Hash + truncated preview of a step input/output; full payloads are
    stored only when full_capture is on."""
    entry = {
        "sha256": hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16],
        "preview": payload[:PREVIEW_CHARS],
        "chars": len(payload),
    }
    if full_capture:
        entry["full"] = payload
    return entry


@dataclass
class StepRecord:
    name: str
    input: dict
    output: dict
    started_at: float
    ended_at: float
    status: str = "ok"  # "ok" | "failed"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input": self.input,
            "output": self.output,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "status": self.status,
        }


@dataclass
class TraceRecord:
    trace_id: str
    question: str
    steps: list[StepRecord]
    retrieval_config: dict
    llm_config: dict
    created_at: float
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "question": self.question,
            "steps": [s.to_dict() for s in self.steps],
            "retrieval_config": self.retrieval_config,
            "llm_config": self.llm_config,
            "created_at": self.created_at,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceRecord":
        return cls(
            trace_id=d["trace_id"],
            question=d["question"],
            steps=[StepRecord(**s) for s in d["steps"]],
            retrieval_config=d["retrieval_config"],
            llm_config=d["llm_config"],
            created_at=d["created_at"],
            notes=d.get("notes", {}),
        )


def deterministic_trace_id(question: str, retrieval_config: dict, llm_config: dict,
                           store_fingerprint: str) -> str:
    """Content-derived id: identical inputs over identical store contents
    reuse the id, which is what makes scripted chains byte-reproducible."""
    blob = json.dumps(
        {
            "question": question,
            "retrieval": retrieval_config,
            "llm": llm_config,
            "store": store_fingerprint,
        },
        sort_keys=True,
    )
    return "tr-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RetentionPolicy:
    active_days: int = 14
    archive_path: str = ""

    def __post_init__(self):
        if self.active_days < 1:
            raise ValueError("active_days must be >= 1")


class TraceStore:
    """Append-only trace log under one directory: active.log + archive.log.

    Appends are serialized through a single lock and flushed before the
    caller proceeds, so a chat response never outruns its trace.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.active_path = self.directory / "active.log"
        self.archive_path = self.directory / "archive.log"
        self._lock = threading.Lock()

    def _read(self, path: Path) -> list[TraceRecord]:
        if not path.exists():
            return []
        records = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(TraceRecord.from_dict(json.loads(line)))
        return records

    def record(self, trace: TraceRecord) -> None:
        line = json.dumps(trace.to_dict(), ensure_ascii=False, sort_keys=True)
        with self._lock:
            with open(self.active_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def get(self, trace_id: str) -> tuple[TraceRecord, str] | None:
        """Latest record with this id and where it lives: "active" or
        "archived". Active wins when both exist."""
        with self._lock:
            for path, location in ((self.active_path, "active"), (self.archive_path, "archived")):
                found = None
                for rec in self._read(path):
                    if rec.trace_id == trace_id:
                        found = rec
                if found is not None:
                    return found, location
        return None

    def active_records(self) -> list[TraceRecord]:
        with self._lock:
            return self._read(self.active_path)

    def sweep_retention(self, policy: RetentionPolicy, now: float) -> int:
        """Move records older than active_days to the archive; returns the
        archived count. Never deletes; immediately re-running archives 0."""
        cutoff = now - policy.active_days * 86400.0
        archive_path = Path(policy.archive_path) if policy.archive_path else self.archive_path
        with self._lock:
            records = self._read(self.active_path)
            keep = [r for r in records if r.created_at >= cutoff]
            move = [r for r in records if r.created_at < cutoff]
            if not move:
                return 0
            with open(archive_path, "a", encoding="utf-8") as fh:
                for rec in move:
                    fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            tmp = self.active_path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                for rec in keep:
                    fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            tmp.replace(self.active_path)
        return len(move)


class TraceBuilder:
    """Collects step records for one chain run."""

    def __init__(self, question: str, retrieval_config: dict, llm_config: dict,
                 clock: Clock = time.time, full_capture: bool = False):
        self.question = question
        self.retrieval_config = retrieval_config
        self.llm_config = llm_config
        self.clock = clock
        self.full_capture = full_capture
        self.steps: list[StepRecord] = []
        self.notes: dict[str, str] = {}

    def step(self, name: str, input_payload: str, fn: Callable[[], tuple[object, str]]):
        """Run one step; fn returns (value, output_payload). The step record
        is appended whether the step succeeds or raises."""
        started = self.clock()
        try:
            value, output_payload = fn()
        except Exception:
            self.steps.append(
                StepRecord(
                    name=name,
                    input=digest_payload(input_payload, self.full_capture),
                    output=digest_payload("", False),
                    started_at=started,
                    ended_at=self.clock(),
                    status="failed",
                )
            )
            raise
        self.steps.append(
            StepRecord(
                name=name,
                input=digest_payload(input_payload, self.full_capture),
                output=digest_payload(output_payload, self.full_capture),
                started_at=started,
                ended_at=self.clock(),
                status="ok",
            )
        )
        return value

    def build(self, trace_id: str) -> TraceRecord:
        return TraceRecord(
            trace_id=trace_id,
            question=self.question,
            steps=self.steps,
            retrieval_config=self.retrieval_config,
            llm_config=self.llm_config,
            created_at=self.clock(),
            notes=dict(self.notes),
        )
