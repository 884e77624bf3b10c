"""Operator entry points: ingest, query, dataset, eval, serve, sweep.

Every command is a thin shell over Engine methods; exit codes are 0 for
success, 1 for caller mistakes, 2 for backend failures. With
--format structured, results go to stdout and errors to stderr as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .app import Engine
from .config import AppConfig
from .errors import (
    AuthMissing,
    ChainFailure,
    CorruptFile,
    EmptyCompletion,
    GenerationExhausted,
    InvalidTransition,
    JoinFailure,
    NoScriptedMatch,
    RemoteUnavailable,
    UnknownItem,
    UnknownTemplate,
    ValidationFailed,
    VersionUnsupported,
)
from .evaluation import render_report
from .vector_store import RetrievalConfig

USER_ERRORS = (
    ValueError,
    UnknownItem,
    UnknownTemplate,
    ValidationFailed,
    InvalidTransition,
    JoinFailure,
    FileNotFoundError,
)
BACKEND_ERRORS = (
    RemoteUnavailable,
    AuthMissing,
    ChainFailure,
    EmptyCompletion,
    NoScriptedMatch,
    GenerationExhausted,
    CorruptFile,
    VersionUnsupported,
)


def _retrieval_config(args, base: RetrievalConfig) -> RetrievalConfig:
    metric = getattr(args, "metric", None)
    if metric is None and getattr(args, "k", None) is None:
        return base
    mode = base.mode
    if metric == "mmr":
        metric, mode = "cosine", "mmr"
    elif metric is not None:
        mode = "plain_topk"
    return RetrievalConfig(
        metric=metric or base.metric,
        mode=mode,
        k=args.k if args.k is not None else base.k,
        fetch_k=getattr(args, "fetch_k", None),
        mmr_lambda=(
            args.mmr_lambda
            if getattr(args, "mmr_lambda", None) is not None
            else base.mmr_lambda
        ),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragkit",
        description="Retrieval-augmented generation over a local paper corpus",
    )
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--store", type=Path, help="override vector store path")
    parser.add_argument(
        "--format", choices=("human", "structured"), default="human",
        help="output format",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="chunk, embed, and store a corpus")
    p_ingest.add_argument("manifest", type=Path)

    p_query = sub.add_parser("query", help="ask one question")
    p_query.add_argument("question")
    p_query.add_argument("--metric", choices=("cosine", "euclidean", "dot", "mmr"))
    p_query.add_argument("--k", type=int)
    p_query.add_argument("--fetch-k", dest="fetch_k", type=int)
    p_query.add_argument("--mmr-lambda", dest="mmr_lambda", type=float)

    p_dataset = sub.add_parser("dataset", help="benchmark dataset workflows")
    dsub = p_dataset.add_subparsers(dest="dataset_command", required=True)
    p_gen = dsub.add_parser("gen", help="generate QA items")
    p_gen.add_argument("--dataset", required=True)
    p_gen.add_argument("--doc", required=True, help="doc_id or 'random'")
    p_gen.add_argument("--n", type=int, default=1)
    p_gen.add_argument("--claims", type=int, default=3)
    p_gen.add_argument("--seed", type=int)
    p_review = dsub.add_parser("review", help="accept / edit / reject an item")
    p_review.add_argument("--dataset", required=True)
    p_review.add_argument("--qa", required=True)
    p_review.add_argument("--action", required=True, choices=("accept", "edit", "reject"))
    p_review.add_argument("--payload", help="JSON object or @file for edits")
    p_review.add_argument("--annotator", default="cli")
    p_review.add_argument("--force", action="store_true")
    p_export = dsub.add_parser("export", help="write the evaluation export")
    p_export.add_argument("--dataset", required=True)
    p_export.add_argument("--out", type=Path)

    p_eval = sub.add_parser("eval", help="evaluation runs")
    esub = p_eval.add_subparsers(dest="eval_command", required=True)
    p_eval_run = esub.add_parser("run", help="run the chain over a dataset and score it")
    p_eval_run.add_argument("dataset")
    p_eval_run.add_argument("--metric", choices=("cosine", "euclidean", "dot", "mmr"))
    p_eval_run.add_argument("--k", type=int)
    p_eval_run.add_argument("--no-ragas", action="store_true")

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    p_sweep = sub.add_parser("sweep", help="archive traces older than the retention window")
    p_sweep.add_argument("--now", type=float, help="fabricated clock for testing")

    return parser


def _emit(args, payload: dict, human: str) -> None:
    if args.format == "structured":
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True))
    else:
        print(human, end="" if human.endswith("\n") else "\n")


def _run(args, engine: Engine) -> int:
    if args.command == "ingest":
        counts = engine.ingest(args.manifest)
        _emit(
            args,
            counts,
            f"documents: {counts['documents']}\nchunks: {counts['chunks']}\n"
            f"stored: {counts['stored']}",
        )
        return 0

    if args.command == "query":
        if not args.question.strip():
            raise ValueError("question must be nonempty")
        rcfg = _retrieval_config(args, engine.config.retrieval)
        response = engine.chat(args.question, rcfg)
        if args.format == "structured":
            print(json.dumps(response.to_dict(), ensure_ascii=False, sort_keys=True))
        else:
            print(response.markdown)
        print(f"trace: {response.trace_id}", file=sys.stderr)
        return 0

    if args.command == "dataset":
        if args.dataset_command == "gen":
            items = engine.generate_dataset_items(
                args.dataset, args.doc, args.n, args.claims, seed=args.seed
            )
            _emit(
                args,
                {"generated": [i.to_dict() for i in items]},
                "\n".join(f"{i.qa_id}  {i.question}" for i in items),
            )
            return 0
        if args.dataset_command == "review":
            payload = None
            if args.payload:
                raw = args.payload
                if raw.startswith("@"):
                    raw = Path(raw[1:]).read_text(encoding="utf-8")
                payload = json.loads(raw)
            item = engine.review_item(
                args.dataset, args.qa, args.action, args.annotator,
                payload=payload, force=args.force,
            )
            _emit(args, {"item": item.to_dict()}, f"{item.qa_id} -> {item.status}")
            return 0
        if args.dataset_command == "export":
            rows = engine.export(args.dataset, path=args.out)
            text = "".join(
                json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows
            )
            if args.out is None and args.format == "human":
                print(text, end="")
            else:
                _emit(args, {"exported": len(rows), "path": str(args.out)},
                      f"exported: {len(rows)}")
            return 0

    if args.command == "eval":
        rcfg = _retrieval_config(args, engine.config.retrieval)
        report_id, report = engine.eval_run(
            args.dataset, rcfg, with_ragas=not args.no_ragas
        )
        _emit(
            args,
            {"report_id": report_id, "report": report},
            f"report: {report_id}\n\n{render_report(report)}",
        )
        return 0

    if args.command == "sweep":
        archived = engine.sweep_retention(now=args.now)
        _emit(args, {"archived": archived}, f"archived: {archived}")
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(engine), host=args.host, port=args.port)
        return 0

    raise ValueError(f"unknown command {args.command!r}")


def _report_error(args, code: str, exc: Exception) -> None:
    if getattr(args, "format", "human") == "structured":
        body = {"error": {"code": code, "message": str(exc)}}
        print(json.dumps(body, ensure_ascii=False, sort_keys=True), file=sys.stderr)
    else:
        print(f"error ({code}): {exc}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = AppConfig.from_file(args.config) if args.config else AppConfig()
        if args.store:
            config.store_path = args.store
        engine = Engine(config)
        return _run(args, engine)
    except USER_ERRORS as exc:
        _report_error(args, type(exc).__name__, exc)
        return 1
    except BACKEND_ERRORS as exc:
        _report_error(args, type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
