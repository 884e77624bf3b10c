"""Local retrieval-augmented generation engine: ingestion, vector retrieval,
cited answer chains, benchmark dataset tooling, and evaluation metrics."""

from .chain import ChatResponse, PromptBundle, RetrievalDecision, run_chain
from .config import AppConfig
from .dataset import Dataset, DatasetStore, QAPair, generate_qa, validate_qa
from .embedding import EmbeddingConfig, deterministic_embed, embed_batch
from .evaluation import (
    Judge,
    MetricReport,
    RunResult,
    Verdict,
    eval_ragas,
    eval_standard,
)
from .ingest import (
    Chunk,
    ChunkConfig,
    DocumentMeta,
    SourceDocument,
    ingest_document,
    split_latex,
    split_recursive,
)
from .llm import LlmConfig, RemoteLlm, ScriptedLlm, ScriptedRule
from .markdown import repair_markdown, validate_markdown
from .templates import Template, TemplateRegistry
from .tracing import RetentionPolicy, TraceRecord, TraceStore
from .vector_store import (
    RetrievalConfig,
    ScoredHit,
    VectorRecord,
    VectorStore,
    similarity,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "ChatResponse",
    "Chunk",
    "ChunkConfig",
    "Dataset",
    "DatasetStore",
    "DocumentMeta",
    "EmbeddingConfig",
    "Judge",
    "LlmConfig",
    "MetricReport",
    "PromptBundle",
    "QAPair",
    "RemoteLlm",
    "RetentionPolicy",
    "RetrievalConfig",
    "RetrievalDecision",
    "RunResult",
    "ScoredHit",
    "ScriptedLlm",
    "ScriptedRule",
    "SourceDocument",
    "Template",
    "TemplateRegistry",
    "TraceRecord",
    "TraceStore",
    "VectorRecord",
    "VectorStore",
    "Verdict",
    "deterministic_embed",
    "embed_batch",
    "eval_ragas",
    "eval_standard",
    "generate_qa",
    "ingest_document",
    "repair_markdown",
    "run_chain",
    "similarity",
    "split_latex",
    "split_recursive",
    "validate_markdown",
    "validate_qa",
]
