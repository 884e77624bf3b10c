"""HTTP facade over ingestion, chat, datasets, traces, and evaluation.

Every failure returns a structured body {code, message, trace_id?}; 4xx for
caller faults, 5xx for backend faults. Archived traces answer 410 with a
pointer to the archive file.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .app import Engine
from .errors import (
    AuthMissing,
    ChainFailure,
    EmptyCompletion,
    GenerationExhausted,
    InvalidTransition,
    JoinFailure,
    NoScriptedMatch,
    RagkitError,
    RemoteUnavailable,
    UnknownItem,
    UnknownTemplate,
    ValidationFailed,
)
from .ingest import DocumentMeta, SourceDocument
from .vector_store import RetrievalConfig


class ChatRequest(BaseModel):
    question: str = ""
    retrieval_config: dict | None = None


class InlineDocument(BaseModel):
    doc_id: str
    body: str
    arxiv_id: str
    kind: str = "plain_text"
    primary_category: str = ""


class IngestRequest(BaseModel):
    manifest: str | None = None
    documents: list[InlineDocument] | None = None


class GenerateRequest(BaseModel):
    doc_ref: str
    n_questions: int = Field(default=1, ge=1)
    claims_per_question: int = Field(default=3, ge=1)
    seed: int | None = None


class ReviewRequest(BaseModel):
    action: str
    annotator: str = "web"
    payload: dict | None = None
    force: bool = False


class EvalRunRequest(BaseModel):
    dataset_id: str
    retrieval_config: dict | None = None
    with_ragas: bool = True


class SweepRequest(BaseModel):
    now: float | None = None


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="ragkit", version="0.1.0")

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        token = engine.config.auth_token
        if token:
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return _error(401, "unauthorized", "missing or wrong bearer token")
        return await call_next(request)

    @app.exception_handler(RagkitError)
    async def ragkit_errors(request: Request, exc: RagkitError):
        if isinstance(exc, UnknownItem):
            return _error(404, "unknown_item", str(exc))
        if isinstance(exc, InvalidTransition):
            return _error(409, "invalid_transition", str(exc))
        if isinstance(exc, ValidationFailed):
            return _error(400, "validation_failed", str(exc), violations=exc.violations)
        if isinstance(exc, JoinFailure):
            return _error(400, "join_failure", str(exc), orphans=exc.orphans)
        if isinstance(exc, UnknownTemplate):
            return _error(400, "unknown_template", str(exc))
        if isinstance(exc, ChainFailure):
            return _error(502, "chain_failure", str(exc), trace_id=exc.trace_id)
        if isinstance(
            exc,
            (RemoteUnavailable, AuthMissing, EmptyCompletion, NoScriptedMatch,
             GenerationExhausted),
        ):
            return _error(502, type(exc).__name__, str(exc))
        return _error(500, type(exc).__name__, str(exc))

    @app.exception_handler(ValueError)
    async def value_errors(request: Request, exc: ValueError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(OSError)
    async def os_errors(request: Request, exc: OSError):
        return _error(500, "storage_failure", str(exc))

    @app.post("/chat")
    def chat(body: ChatRequest):
        if not body.question.strip():
            return _error(400, "empty_question", "empty question")
        rcfg = (
            RetrievalConfig.from_dict(body.retrieval_config)
            if body.retrieval_config
            else None
        )
        return engine.chat(body.question, rcfg).to_dict()

    @app.post("/ingest")
    def ingest(body: IngestRequest):
        if body.manifest:
            return engine.ingest(Path(body.manifest))
        if body.documents:
            docs = [
                SourceDocument(
                    doc_id=d.doc_id,
                    kind=d.kind,
                    body=d.body,
                    meta=DocumentMeta(
                        arxiv_id=d.arxiv_id, primary_category=d.primary_category
                    ),
                )
                for d in body.documents
            ]
            return engine.ingest_documents(docs)
        return _error(400, "bad_request", "provide manifest or documents")

    @app.get("/traces/{trace_id}")
    def get_trace(trace_id: str):
        found = engine.trace_store.get(trace_id)
        if found is None:
            return _error(404, "unknown_trace", f"trace {trace_id!r} not found")
        record, location = found
        if location == "archived":
            return _error(
                410,
                "trace_archived",
                f"trace {trace_id!r} is archived",
                archive_path=str(engine.trace_store.archive_path),
            )
        return record.to_dict()

    @app.get("/documents")
    def list_documents():
        docs = engine.documents()
        return {
            "documents": [
                {
                    "doc_id": d.doc_id,
                    "arxiv_id": d.meta.arxiv_id,
                    "primary_category": d.meta.primary_category,
                    "kind": d.kind,
                }
                for d in docs.values()
            ]
        }

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        dataset = engine.dataset_store.get(dataset_id)
        return {
            "dataset_id": dataset.dataset_id,
            "name": dataset.name,
            "version": dataset.version,
            "items": [item.to_dict() for item in dataset.ordered_items()],
        }

    @app.post("/datasets/{dataset_id}/generate")
    def generate(dataset_id: str, body: GenerateRequest):
        items = engine.generate_dataset_items(
            dataset_id,
            body.doc_ref,
            body.n_questions,
            body.claims_per_question,
            seed=body.seed,
        )
        return {"generated": [i.to_dict() for i in items]}

    @app.post("/datasets/{dataset_id}/items/{qa_id}/review")
    def review(dataset_id: str, qa_id: str, body: ReviewRequest):
        item = engine.review_item(
            dataset_id, qa_id, body.action, body.annotator,
            payload=body.payload, force=body.force,
        )
        return {"item": item.to_dict()}

    @app.get("/datasets/{dataset_id}/export")
    def export(dataset_id: str):
        import json as _json

        rows = engine.export(dataset_id)
        text = "".join(
            _json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows
        )
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.post("/eval/run")
    def eval_run(body: EvalRunRequest):
        rcfg = (
            RetrievalConfig.from_dict(body.retrieval_config)
            if body.retrieval_config
            else None
        )
        report_id, _report = engine.eval_run(
            body.dataset_id, rcfg, with_ragas=body.with_ragas
        )
        return {"report_id": report_id}

    @app.get("/eval/{report_id}")
    def get_eval(report_id: str):
        return engine.get_report(report_id)

    @app.post("/admin/sweep")
    def sweep(body: SweepRequest):
        return {"archived": engine.sweep_retention(now=body.now)}

    static_dir = Path(__file__).parent / "static"
    if static_dir.exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
