"""End-to-end offline demo: ingest a tiny corpus, ask a question through the
full chain, generate and review a benchmark item, and score both metric
suites. Uses the deterministic embedder and a scripted LLM, so it runs with
no network and produces the same output every time.

    python3 scripts/run_demo.py [workdir]
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from ragkit.app import Engine
from ragkit.config import AppConfig
from ragkit.evaluation import render_report
from ragkit.ingest import DocumentMeta, SourceDocument
from ragkit.llm import ScriptedLlm, ScriptedRule

CORPUS = [
    SourceDocument(
        doc_id="tracker",
        kind="plain_text",
        body=(
            "The proposed tracking detector reconstructs charged particles "
            "between 0.2 and 10 GeV/c with a silicon vertex layer.\n\n"
            "Momentum resolution stays below two percent across the full "
            "acceptance thanks to the outer time projection chamber."
        ),
        meta=DocumentMeta(arxiv_id="2301.00001", primary_category="physics.ins-det"),
    ),
    SourceDocument(
        doc_id="calorimeter",
        kind="latex",
        body=(
            "\\section{Design}\nThe barrel calorimeter uses tungsten powder "
            "with scintillating fibres for electron identification.\n"
            "\\section{Performance}\nEnergy resolution reaches ten percent "
            "over root energy in test beams."
        ),
        meta=DocumentMeta(arxiv_id="2302.00002", primary_category="physics.ins-det"),
    ),
]

QA_COMPLETION = json.dumps(
    {
        "question": "What momentum range does the tracker cover and how well does it resolve momentum?",
        "num_claims": 2,
        "claims": ["It covers 0.2 to 10 GeV/c.", "Resolution is below two percent."],
        "claim_answers": [
            "The covered range is 0.2 to 10 GeV/c.",
            "Momentum resolution stays below two percent.",
        ],
        "full_answer": "The tracker covers 0.2 to 10 GeV/c with momentum resolution below two percent.",
    }
)

CHAIN_RULES = [
    ScriptedRule("Write one question", QA_COMPLETION),
    ScriptedRule("Context passages:", "<<ECHO>>"),
    ScriptedRule("(no context available)", "No source material is available."),
    ScriptedRule("No source material", "<<ECHO>>"),
    ScriptedRule("", "RETRIEVE"),
]

JUDGE_RULES = [
    ScriptedRule("Claim under review:",
                 json.dumps({"recognized": True, "correct": True, "rationale": "ok"})),
    ScriptedRule("Ideal answer:", json.dumps({"hallucination": False})),
    ScriptedRule("Numbered context sentences", json.dumps({"necessary": [0]})),
    ScriptedRule("Ground-truth claims", json.dumps({"found": [True, True]})),
    ScriptedRule("Write 3 questions",
                 json.dumps({"questions": ["alt a?", "alt b?", "alt c?"]})),
    ScriptedRule("Reference answer:", json.dumps({"tp": 2, "fp": 0, "fn": 0})),
    ScriptedRule("Retrieved context:",
                 json.dumps({"total_statements": 2, "supported_statements": 2})),
]


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="ragkit-demo-"))
    config = AppConfig.from_dict(
        {
            "data_dir": str(workdir / "data"),
            "embedding": {"backend": "deterministic", "dimension": 64},
            "llm": {"backend": "scripted"},
            "judge": {"backend": "scripted"},
            "retrieval": {"metric": "cosine", "k": 20},
        }
    )
    engine = Engine(
        config,
        llm_client=ScriptedLlm(CHAIN_RULES),
        judge_client=ScriptedLlm(JUDGE_RULES),
    )

    counts = engine.ingest_documents(CORPUS)
    print(f"ingested {counts['documents']} documents -> {counts['chunks']} chunks\n")

    response = engine.chat("What momentum range does the tracking detector cover?")
    print("=== chat response ===")
    print(response.markdown)
    print(f"\ncitations: {list(response.citations)}")
    print(f"trace:     {response.trace_id}\n")

    items = engine.generate_dataset_items("demo", "tracker", 1, 2)
    engine.review_item("demo", items[0].qa_id, "accept", "demo-annotator")
    print(f"benchmark item accepted: {items[0].qa_id}\n")

    report_id, report = engine.eval_run("demo")
    print(f"=== evaluation report {report_id} ===")
    print(render_report(report))
    print(f"artifacts under: {workdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
