from __future__ import annotations

import json

import pytest

from ragkit.embedding import EmbeddingConfig, embed_batch
from ragkit.ingest import ChunkConfig, DocumentMeta, SourceDocument, ingest_document
from ragkit.llm import ScriptedRule
from ragkit.templates import TemplateRegistry
from ragkit.vector_store import VectorRecord, VectorStore

DIM = 64

CORPUS = [
    {
        "doc_id": "tracker",
        "arxiv_id": "2301.00001",
        "primary_category": "physics.ins-det",
        "kind": "plain_text",
        "body": (
            "The proposed tracking detector reconstructs charged particles "
            "between 0.2 and 10 GeV/c with a silicon vertex layer.\n\n"
            "Momentum resolution stays below two percent across the full "
            "acceptance thanks to the outer time projection chamber."
        ),
    },
    {
        "doc_id": "calorimeter",
        "arxiv_id": "2302.00002",
        "primary_category": "physics.ins-det",
        "kind": "latex",
        "body": (
            "\\section{Design}\nThe barrel calorimeter uses tungsten powder "
            "with scintillating fibres for electron identification.\n"
            "\\section{Performance}\nEnergy resolution of the barrel "
            "calorimeter reaches ten percent over root energy in test beams."
        ),
    },
    {
        "doc_id": "software",
        "arxiv_id": "2303.00003",
        "primary_category": "hep-ex",
        "kind": "plain_text",
        "body": (
            "The streaming readout software stack performs online event "
            "filtering and calibration with a modular reconstruction chain."
        ),
    },
]

NO_CONTEXT_ANSWER = "No source material is available for this question."


def corpus_documents() -> list[SourceDocument]:
    return [
        SourceDocument(
            doc_id=d["doc_id"],
            kind=d["kind"],
            body=d["body"],
            meta=DocumentMeta(arxiv_id=d["arxiv_id"], primary_category=d["primary_category"]),
        )
        for d in CORPUS
    ]


def build_store(dim: int = DIM) -> VectorStore:
    cfg = ChunkConfig()
    embed_cfg = EmbeddingConfig(backend="deterministic", dimension=dim)
    store = VectorStore(dimension=dim)
    for doc in corpus_documents():
        chunks = ingest_document(doc, cfg)
        vectors = embed_batch([c.text for c in chunks], embed_cfg)
        store.upsert([VectorRecord.make(c, v) for c, v in zip(chunks, vectors)])
    return store


def chain_rules() -> list[ScriptedRule]:
    """Scripted backend for the full chain. Matchers key off text fragments
    that only one step's prompt can contain; the catch-all decide rule
    goes last."""
    return [
        ScriptedRule("Context passages:", "<<ECHO>>"),
        ScriptedRule("(no context available)", NO_CONTEXT_ANSWER),
        ScriptedRule("No source material", "<<ECHO>>"),
        ScriptedRule("hello", "DIRECT: greeting"),
        ScriptedRule("", "RETRIEVE"),
    ]


def write_corpus_tree(root) -> str:
    """Materialize the fixture corpus + manifest under `root`; returns the
    manifest path."""
    docs_dir = root / "docs"
    docs_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for d in CORPUS:
        suffix = ".tex" if d["kind"] == "latex" else ".txt"
        path = docs_dir / f"{d['doc_id']}{suffix}"
        path.write_text(d["body"], encoding="utf-8")
        lines.append(
            json.dumps(
                {
                    "path": str(path),
                    "doc_id": d["doc_id"],
                    "arxiv_id": d["arxiv_id"],
                    "primary_category": d["primary_category"],
                }
            )
        )
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(manifest)


CHAIN_FIXTURE = [
    {"match": "Context passages:", "completion": "<<ECHO>>"},
    {"match": "(no context available)", "completion": NO_CONTEXT_ANSWER},
    {"match": "No source material", "completion": "<<ECHO>>"},
    {"match": "hello", "completion": "DIRECT: greeting"},
    {"match": "", "completion": "RETRIEVE"},
]

# Matchers are checked in order; the generic "Retrieved context:" rule has to
# come last so the more specific judge prompts win first.
JUDGE_FIXTURE = [
    {"match": "Claim under review:",
     "completion": json.dumps({"recognized": True, "correct": True, "rationale": "ok"})},
    {"match": "Ideal answer:", "completion": json.dumps({"hallucination": False})},
    {"match": "Numbered context sentences", "completion": json.dumps({"necessary": [0]})},
    {"match": "Ground-truth claims",
     "completion": json.dumps({"found": [True, True, True]})},
    {"match": "Write 3 questions",
     "completion": json.dumps({"questions": ["alt one?", "alt two?", "alt three?"]})},
    {"match": "Reference answer:", "completion": json.dumps({"tp": 1, "fp": 0, "fn": 0})},
    {"match": "Retrieved context:",
     "completion": json.dumps({"total_statements": 2, "supported_statements": 2})},
]

QA_FIXTURE_COMPLETION = json.dumps(
    {
        "question": "What tracker is proposed, what range does it cover, and how well does it resolve momentum?",
        "num_claims": 3,
        "claims": [
            "A silicon vertex tracker is proposed.",
            "It covers 0.2 to 10 GeV/c.",
            "Momentum resolution is below two percent.",
        ],
        "claim_answers": [
            "The proposal is a silicon vertex tracking detector.",
            "The covered momentum range is 0.2 to 10 GeV/c.",
            "The resolution stays below two percent.",
        ],
        "full_answer": (
            "A silicon vertex tracking detector is proposed, covering 0.2 to 10 "
            "GeV/c with momentum resolution below two percent."
        ),
    }
)


def make_workspace(root, *, k: int = 20, with_generation_rule: bool = True) -> str:
    """Materialize corpus, scripted fixtures, and a config file under `root`;
    returns the config path."""
    manifest = write_corpus_tree(root)
    chain_rules_json = list(CHAIN_FIXTURE)
    if with_generation_rule:
        # dataset generation prompts carry this phrase from the template
        chain_rules_json.insert(
            0, {"match": "Write one question", "completion": QA_FIXTURE_COMPLETION}
        )
    chain_path = root / "chain_rules.json"
    chain_path.write_text(json.dumps(chain_rules_json), encoding="utf-8")
    judge_path = root / "judge_rules.json"
    judge_path.write_text(json.dumps(JUDGE_FIXTURE), encoding="utf-8")
    config = {
        "data_dir": str(root / "data"),
        "manifest_path": manifest,
        "embedding": {"backend": "deterministic", "dimension": DIM},
        "llm": {"backend": "scripted", "scripted_fixture": str(chain_path)},
        "judge": {"backend": "scripted", "scripted_fixture": str(judge_path)},
        "retrieval": {"metric": "cosine", "mode": "plain_topk", "k": k},
        "retention": {"active_days": 14},
        "full_capture": True,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return str(config_path)


@pytest.fixture()
def registry() -> TemplateRegistry:
    return TemplateRegistry.default()


@pytest.fixture()
def store() -> VectorStore:
    return build_store()


@pytest.fixture()
def embed_cfg() -> EmbeddingConfig:
    return EmbeddingConfig(backend="deterministic", dimension=DIM)
