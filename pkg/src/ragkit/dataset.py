"""Benchmark dataset tooling: LLM-assisted generation of N-claim QA items,
the annotator review workflow, and line-delimited exports for evaluation.

Every mutation appends an event to the dataset's log; replaying the log
reproduces the state exactly, so annotator history stays auditable and
nothing is ever edited in place.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    EmptyExport,
    GenerationExhausted,
    InvalidTransition,
    RagkitError,
    UnknownItem,
    ValidationFailed,
)
from .ingest import SourceDocument
from .llm import LlmClient, LlmConfig, parse_json_object
from .templates import TemplateRegistry

GENERATE_TEMPLATE = "dataset_generate"
STATUSES = ("generated", "accepted", "edited", "rejected")
DEFAULT_EXPORT_STATUSES = frozenset({"accepted", "edited"})

Clock = Callable[[], float]


@dataclass(frozen=True)
class QAPair:
    qa_id: str
    question: str
    num_claims: int
    claims: tuple[str, ...]
    claim_answers: tuple[str, ...]
    full_answer: str
    source_arxiv_id: str
    status: str = "generated"
    annotator: str = ""
    created_at: float = 0.0
    reviewed_at: float | None = None

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "question": self.question,
            "num_claims": self.num_claims,
            "claims": list(self.claims),
            "claim_answers": list(self.claim_answers),
            "full_answer": self.full_answer,
            "source_arxiv_id": self.source_arxiv_id,
            "status": self.status,
            "annotator": self.annotator,
            "created_at": self.created_at,
            "reviewed_at": self.reviewed_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QAPair":
        return cls(
            qa_id=d["qa_id"],
            question=d["question"],
            num_claims=d["num_claims"],
            claims=tuple(d["claims"]),
            claim_answers=tuple(d["claim_answers"]),
            full_answer=d["full_answer"],
            source_arxiv_id=d["source_arxiv_id"],
            status=d.get("status", "generated"),
            annotator=d.get("annotator", ""),
            created_at=d.get("created_at", 0.0),
            reviewed_at=d.get("reviewed_at"),
        )


def qa_id_for(source_arxiv_id: str, question: str, claims: Sequence[str]) -> str:
    blob = json.dumps(
        {"source": source_arxiv_id, "question": question, "claims": list(claims)},
        sort_keys=True,
    )
    return "qa-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def validate_qa(raw: Mapping) -> tuple[QAPair | None, list[str]]:
    """Check a structured object against the QA schema. Returns the item and
    an empty list on success, or (None, violations); never raises."""
    violations: list[str] = []
    for name in ("question", "claims", "claim_answers", "full_answer", "source_arxiv_id"):
        if name not in raw:
            violations.append(f"missing field: {name}")
    if violations:
        return None, violations

    question = str(raw["question"]).strip()
    full_answer = str(raw["full_answer"]).strip()
    source = str(raw["source_arxiv_id"]).strip()
    claims = [str(c).strip() for c in raw.get("claims", [])]
    answers = [str(a).strip() for a in raw.get("claim_answers", [])]
    declared = raw.get("num_claims", len(claims))

    if not question:
        violations.append("empty question")
    if not full_answer:
        violations.append("empty full_answer")
    if not source:
        violations.append("empty source_arxiv_id")
    if not isinstance(declared, int) or declared < 1:
        violations.append("num_claims must be a positive integer")
    elif len(claims) != declared or len(answers) != declared:
        violations.append(
            f"claim count mismatch: declared {declared}, "
            f"got {len(claims)} claims / {len(answers)} answers"
        )
    if any(not c for c in claims):
        violations.append("empty claim text")
    if any(not a for a in answers):
        violations.append("empty claim answer")
    if raw.get("status", "generated") not in STATUSES:
        violations.append(f"unknown status {raw.get('status')!r}")
    if violations:
        return None, violations

    return (
        QAPair(
            qa_id=raw.get("qa_id") or qa_id_for(source, question, claims),
            question=question,
            num_claims=declared,
            claims=tuple(claims),
            claim_answers=tuple(answers),
            full_answer=full_answer,
            source_arxiv_id=source,
            status=raw.get("status", "generated"),
            annotator=raw.get("annotator", ""),
            created_at=raw.get("created_at", 0.0),
            reviewed_at=raw.get("reviewed_at"),
        ),
        [],
    )


@dataclass
class Dataset:
    dataset_id: str
    name: str
    items: dict[str, QAPair] = field(default_factory=dict)
    version: int = 0

    def ordered_items(self) -> list[QAPair]:
        return [self.items[qa_id] for qa_id in sorted(self.items)]


def generate_qa(
    doc: SourceDocument,
    n_questions: int,
    claims_per_question: int,
    client: LlmClient,
    cfg: LlmConfig,
    registry: TemplateRegistry | None = None,
    clock: Clock = time.time,
    retries_per_item: int = 3,
) -> tuple[list[QAPair], int]:
    """Ask the LLM for one structured QA object per question; malformed
    outputs are retried up to the cap. Returns (items, retry_count); raises
    GenerationExhausted (carrying the partial list) when the budget runs out."""
    if n_questions < 1:
        raise ValueError("n_questions must be >= 1")
    if claims_per_question < 1:
        raise ValueError("claims_per_question must be >= 1")
    registry = registry or TemplateRegistry.default()
    template = registry.get(GENERATE_TEMPLATE)
    system = template.render("system")

    items: list[QAPair] = []
    retries = 0
    for _ in range(n_questions):
        produced = None
        for _attempt in range(retries_per_item + 1):
            avoid = ""
            if items:
                listed = "; ".join(i.question for i in items)
                avoid = f"Do not repeat these questions: {listed}"
            user = template.render(
                "user",
                arxiv_id=doc.meta.arxiv_id,
                body=doc.body,
                claims_per_question=str(claims_per_question),
                avoid=avoid,
            )
            try:
                text = client.complete(
                    [{"role": "system", "content": system}, {"role": "user", "content": user}],
                    cfg,
                ).text
                raw = parse_json_object(text)
            except (ValueError, RagkitError):
                retries += 1
                continue
            enriched = {
                **raw,
                "source_arxiv_id": doc.meta.arxiv_id,
                "status": "generated",
                "created_at": clock(),
            }
            qa, violations = validate_qa(enriched)
            if qa is None or qa.num_claims != claims_per_question:
                retries += 1
                continue
            if any(existing.qa_id == qa.qa_id for existing in items):
                retries += 1
                continue
            produced = qa
            break
        if produced is None:
            raise GenerationExhausted(
                f"could not generate item {len(items) + 1} of {n_questions} "
                f"after {retries_per_item + 1} attempts",
                items=items,
            )
        items.append(produced)
    return items, retries


def review_update(
    dataset: Dataset,
    qa_id: str,
    action: str,
    annotator: str,
    payload: Mapping | None = None,
    force: bool = False,
    clock: Clock = time.time,
) -> QAPair:
    """Apply one review action in place; bumps the dataset version and
    returns the updated item. Edits revalidate before anything changes."""
    if action not in ("accept", "edit", "reject"):
        raise ValueError(f"unknown action {action!r}")
    if qa_id not in dataset.items:
        raise UnknownItem(f"qa_id {qa_id!r} not in dataset {dataset.dataset_id!r}")
    item = dataset.items[qa_id]
    if item.status != "generated" and not force:
        raise InvalidTransition(
            f"item {qa_id} is {item.status}; re-reviewing needs force=True"
        )
    now = clock()
    if action == "edit":
        merged = {**item.to_dict(), **(payload or {})}
        merged["qa_id"] = item.qa_id  # identity survives edits
        merged["status"] = "edited"
        updated, violations = validate_qa(merged)
        if updated is None:
            raise ValidationFailed(violations)
        updated = replace(updated, annotator=annotator, reviewed_at=now)
    else:
        status = "accepted" if action == "accept" else "rejected"
        updated = replace(item, status=status, annotator=annotator, reviewed_at=now)
    dataset.items[qa_id] = updated
    dataset.version += 1
    return updated


def export_dataset(
    dataset: Dataset,
    include: Iterable[str] = DEFAULT_EXPORT_STATUSES,
    path: str | Path | None = None,
) -> list[dict]:
    """Line-delimited export of the items whose status is in `include`,
    ordered by qa_id; every record is revalidated on the way out."""
    include = frozenset(include)
    rows = []
    for item in dataset.ordered_items():
        if item.status not in include:
            continue
        checked, violations = validate_qa(item.to_dict())
        if checked is None:
            raise ValidationFailed([f"{item.qa_id}: {v}" for v in violations])
        rows.append(item.to_dict())
    if not rows:
        warnings.warn(EmptyExport(f"dataset {dataset.dataset_id}: nothing to export"))
    if path is not None:
        text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)
        Path(path).write_text(text, encoding="utf-8")
    return rows


def read_export(path: str | Path) -> list[QAPair]:
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            items.append(QAPair.from_dict(json.loads(line)))
    return items


def pick_unexplored(
    docs: Sequence[SourceDocument], dataset: Dataset, rng: random.Random
) -> SourceDocument | None:
    """Uniform choice among documents that have no items in the dataset yet;
    None when every document is covered. Seed the rng for reproducibility."""
    covered = {item.source_arxiv_id for item in dataset.items.values()}
    fresh = [d for d in docs if d.meta.arxiv_id not in covered]
    if not fresh:
        return None
    return rng.choice(fresh)


class DatasetStore:
    """One append-log file per dataset under a directory, replayed on load."""

    def __init__(self, directory: str | Path, clock: Clock = time.time):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._cache: dict[str, Dataset] = {}

    def _log_path(self, dataset_id: str) -> Path:
        return self.directory / f"{dataset_id}.log"

    def _append(self, dataset_id: str, event: dict) -> None:
        with open(self._log_path(dataset_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.log"))

    def create(self, dataset_id: str, name: str = "") -> Dataset:
        if self._log_path(dataset_id).exists():
            return self.get(dataset_id)
        self._append(
            dataset_id,
            {"event": "create", "dataset_id": dataset_id, "name": name or dataset_id,
             "at": self.clock()},
        )
        return self.get(dataset_id, refresh=True)

    def get(self, dataset_id: str, refresh: bool = False) -> Dataset:
        if not refresh and dataset_id in self._cache:
            return self._cache[dataset_id]
        path = self._log_path(dataset_id)
        if not path.exists():
            raise UnknownItem(f"dataset {dataset_id!r} does not exist")
        dataset = replay_events(
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        self._cache[dataset_id] = dataset
        return dataset

    def add_items(self, dataset_id: str, items: Sequence[QAPair]) -> Dataset:
        dataset = self.get(dataset_id)
        for item in items:
            if item.qa_id in dataset.items:
                raise InvalidTransition(f"qa_id {item.qa_id} already in dataset")
        for item in items:
            dataset.items[item.qa_id] = item
            dataset.version += 1
            self._append(dataset_id, {"event": "add", "item": item.to_dict(),
                                      "at": self.clock()})
        return dataset

    def review(
        self,
        dataset_id: str,
        qa_id: str,
        action: str,
        annotator: str,
        payload: Mapping | None = None,
        force: bool = False,
    ) -> QAPair:
        dataset = self.get(dataset_id)
        updated = review_update(
            dataset, qa_id, action, annotator, payload=payload, force=force, clock=self.clock
        )
        self._append(
            dataset_id,
            {
                "event": "review",
                "qa_id": qa_id,
                "action": action,
                "annotator": annotator,
                "payload": dict(payload) if payload else None,
                "force": force,
                "at": updated.reviewed_at,
            },
        )
        return updated


def replay_events(events: Iterable[dict]) -> Dataset:
    """Rebuild a dataset from its event log; the one place event semantics
    are defined, used by both live loading and the audit tests."""
    dataset: Dataset | None = None
    for event in events:
        kind = event["event"]
        if kind == "create":
            dataset = Dataset(dataset_id=event["dataset_id"], name=event["name"])
        elif dataset is None:
            raise ValueError("event log does not start with create")
        elif kind == "add":
            item = QAPair.from_dict(event["item"])
            dataset.items[item.qa_id] = item
            dataset.version += 1
        elif kind == "review":
            review_update(
                dataset,
                event["qa_id"],
                event["action"],
                event["annotator"],
                payload=event.get("payload"),
                force=event.get("force", False),
                clock=lambda at=event["at"]: at,
            )
        else:
            raise ValueError(f"unknown event kind {kind!r}")
    if dataset is None:
        raise ValueError("empty event log")
    return dataset
