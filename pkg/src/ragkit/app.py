"""Engine: the application layer behind both the CLI and the HTTP service.

Owns the loaded vector store, template registry, trace store, dataset
store, and LLM clients, and exposes the end-to-end operations (ingest,
chat, dataset workflows, evaluation runs, retention sweeps). CLI commands
and HTTP endpoints are thin shells over these methods, so their effects are
reproducible via direct library calls.
"""

from __future__ import annotations

import hashlib
import json
import random
import time

from .chain import ChatResponse, run_chain
from .config import AppConfig
from .dataset import (
    DatasetStore,
    QAPair,
    export_dataset,
    generate_qa,
    pick_unexplored,
)
from .embedding import embed_batch
from .errors import UnknownItem
from .evaluation import (
    Judge,
    RunResult,
    aggregate_report,
    eval_ragas,
    eval_standard,
    read_report,
    write_report,
    write_run_results,
)
from .ingest import SourceDocument, ingest_document, load_manifest
from .llm import LlmClient, make_client
from .templates import TemplateRegistry
from .tracing import Clock, TraceStore
from .vector_store import RetrievalConfig, VectorRecord, VectorStore


class Engine:
    def __init__(self, config: AppConfig, clock: Clock = time.time,
                 llm_client: LlmClient | None = None,
                 judge_client: LlmClient | None = None):
        self.config = config
        self.clock = clock
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.registry = (
            TemplateRegistry.from_dir(config.templates_dir)
            if config.templates_dir
            else TemplateRegistry.default()
        )
        self.store = (
            VectorStore.load(config.store_path)
            if config.store_path.exists()
            else VectorStore(dimension=config.embedding.dimension)
        )
        self.trace_store = TraceStore(config.traces_dir)
        self.dataset_store = DatasetStore(config.datasets_dir, clock=clock)
        self.llm_client = llm_client or make_client(config.llm)
        self.judge_client = judge_client or make_client(config.judge)
        self._documents: dict[str, SourceDocument] | None = None

    # ------------------------------------------------------------------
    # corpus

    def documents(self) -> dict[str, SourceDocument]:
        if self._documents is None:
            if self.config.manifest_path is None:
                self._documents = {}
            else:
                self._documents = {
                    d.doc_id: d for d in load_manifest(self.config.manifest_path)
                }
        return self._documents

    def ingest_documents(self, docs: list[SourceDocument]) -> dict:
        """Chunk, embed, upsert, and persist the given documents."""
        chunk_count = 0
        for doc in docs:
            chunks = ingest_document(doc, self.config.chunking)
            vectors = embed_batch([c.text for c in chunks], self.config.embedding)
            self.store.upsert(
                [VectorRecord.make(c, v) for c, v in zip(chunks, vectors)]
            )
            chunk_count += len(chunks)
        self.config.store_path.parent.mkdir(parents=True, exist_ok=True)
        self.store.save(self.config.store_path)
        known = self.documents()
        known.update({d.doc_id: d for d in docs})
        return {"documents": len(docs), "chunks": chunk_count,
                "vectors": chunk_count, "stored": len(self.store)}

    def ingest(self, manifest_path=None) -> dict:
        """Ingest every document named by the corpus manifest."""
        path = manifest_path or self.config.manifest_path
        if path is None:
            raise ValueError("no manifest path configured or given")
        return self.ingest_documents(load_manifest(path))

    # ------------------------------------------------------------------
    # chat

    def chat(self, question: str, rcfg: RetrievalConfig | None = None,
             context_sink: list | None = None) -> ChatResponse:
        return run_chain(
            question,
            rcfg or self.config.retrieval,
            self.config.llm,
            client=self.llm_client,
            store=self.store,
            embed_cfg=self.config.embedding,
            registry=self.registry,
            trace_store=self.trace_store,
            clock=self.clock,
            full_capture=self.config.full_capture,
            context_sink=context_sink,
        )

    # ------------------------------------------------------------------
    # datasets

    def generate_dataset_items(
        self,
        dataset_id: str,
        doc_ref: str,
        n_questions: int,
        claims_per_question: int,
        seed: int | None = None,
    ) -> list[QAPair]:
        """doc_ref is a doc_id from the manifest, or "random" for a uniform
        pick among documents the dataset has not covered yet."""
        dataset = self.dataset_store.create(dataset_id)
        docs = self.documents()
        if doc_ref == "random":
            rng = random.Random(seed)
            doc = pick_unexplored(list(docs.values()), dataset, rng)
            if doc is None:
                raise UnknownItem("every manifest document already has dataset items")
        elif doc_ref in docs:
            doc = docs[doc_ref]
        else:
            raise UnknownItem(f"doc_id {doc_ref!r} not in the corpus manifest")
        items, _retries = generate_qa(
            doc,
            n_questions,
            claims_per_question,
            self.llm_client,
            self.config.llm,
            self.registry,
            clock=self.clock,
        )
        self.dataset_store.add_items(dataset_id, items)
        return items

    def review_item(self, dataset_id: str, qa_id: str, action: str, annotator: str,
                    payload=None, force: bool = False) -> QAPair:
        return self.dataset_store.review(
            dataset_id, qa_id, action, annotator, payload=payload, force=force
        )

    def export(self, dataset_id: str, path=None) -> list[dict]:
        return export_dataset(self.dataset_store.get(dataset_id), path=path)

    # ------------------------------------------------------------------
    # evaluation

    def _report_id(self, dataset_id: str, version: int, rcfg: RetrievalConfig) -> str:
        blob = json.dumps(
            {
                "dataset": dataset_id,
                "version": version,
                "retrieval": rcfg.snapshot(),
                "store": self.store.fingerprint(),
            },
            sort_keys=True,
        )
        return "rep-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def eval_run(self, dataset_id: str, rcfg: RetrievalConfig | None = None,
                 with_ragas: bool = True) -> tuple[str, dict]:
        """Run the chain for every exported item, score both suites, and
        persist the report plus the raw run results."""
        rcfg = rcfg or self.config.retrieval
        dataset = self.dataset_store.get(dataset_id)
        rows = export_dataset(dataset)
        items = {row["qa_id"]: QAPair.from_dict(row) for row in rows}
        results = []
        for qa_id in sorted(items):
            qa = items[qa_id]
            sink: list = []
            response = self.chat(qa.question, rcfg, context_sink=sink)
            results.append(
                RunResult(
                    qa_id=qa_id,
                    response=response,
                    retrieved_contexts=tuple(sink),
                    trace_id=response.trace_id,
                )
            )
        judge = Judge(self.judge_client, self.config.judge, self.registry)
        standard = eval_standard(results, items, judge)
        ragas = (
            eval_ragas(results, items, judge, self.config.embedding)
            if with_ragas
            else None
        )
        report = aggregate_report(standard, ragas)
        report_id = self._report_id(dataset_id, dataset.version, rcfg)
        self.config.reports_dir.mkdir(parents=True, exist_ok=True)
        write_report(report, self.config.reports_dir / f"{report_id}.json")
        write_run_results(results, self.config.reports_dir / f"{report_id}.runs.jsonl")
        return report_id, report

    def get_report(self, report_id: str) -> dict:
        path = self.config.reports_dir / f"{report_id}.json"
        if not path.exists():
            raise UnknownItem(f"report {report_id!r} does not exist")
        return read_report(path)

    # ------------------------------------------------------------------
    # traces

    def sweep_retention(self, now: float | None = None) -> int:
        return self.trace_store.sweep_retention(
            self.config.retention, self.clock() if now is None else now
        )
