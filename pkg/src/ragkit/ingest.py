"""Corpus ingestion: turn raw text / LaTeX documents into metadata-tagged chunks.

Chunks carry exact half-open character spans into the source body, so the
chunk list is a lossless tiling of the input: every character of the body
is covered by at least one span, and ``chunk.text == body[start:end]``.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import MalformedLatex

DEFAULT_SEPARATORS = ("\n\n", "\n", " ", "")
DEFAULT_LATEX_TAGS = ("section", "subsection", "subsubsection", "paragraph")


@dataclass(frozen=True)
class DocumentMeta:
    arxiv_id: str
    primary_category: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.arxiv_id:
            raise ValueError("arxiv_id must be nonempty")

    def to_dict(self) -> dict:
        return {
            "arxiv_id": self.arxiv_id,
            "primary_category": self.primary_category,
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentMeta":
        return cls(
            arxiv_id=d["arxiv_id"],
            primary_category=d.get("primary_category", ""),
            extra=dict(d.get("extra", {})),
        )


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    kind: str  # "plain_text" | "latex"
    body: str
    meta: DocumentMeta

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be nonempty")
        if self.kind not in ("plain_text", "latex"):
            raise ValueError(f"unknown document kind {self.kind!r}")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    start: int
    end: int
    meta: DocumentMeta

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "start": self.start,
            "end": self.end,
            "meta": self.meta.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Chunk":
        return cls(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            text=d["text"],
            start=d["start"],
            end=d["end"],
            meta=DocumentMeta.from_dict(d["meta"]),
        )


@dataclass(frozen=True)
class ChunkConfig:
    chunk_size: int = 120
    overlap: int = 10
    separators: tuple[str, ...] = DEFAULT_SEPARATORS

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if self.overlap < 0:
            raise ValueError("overlap must be non-negative")
        if self.overlap >= self.chunk_size:
            raise ValueError("overlap must be smaller than chunk_size")


def chunk_id_for(doc_id: str, start: int, end: int) -> str:
    """Stable chunk id; re-ingesting the same document yields the same ids."""
    digest = hashlib.sha256(f"{doc_id}:{start}:{end}".encode("utf-8")).hexdigest()
    return digest[:16]


def _window_spans(lo: int, hi: int, chunk_size: int, overlap: int) -> list[tuple[int, int]]:
    """Sliding windows over [lo, hi): chunk i starts at lo + i*(chunk_size-overlap)."""
    step = chunk_size - overlap
    spans = []
    start = lo
    while True:
        end = min(start + chunk_size, hi)
        spans.append((start, end))
        if end >= hi:
            return spans
        start += step


def _split_on_separator(body: str, lo: int, hi: int, sep: str) -> list[tuple[int, int]]:
    """Split [lo, hi) at each occurrence of sep, keeping sep attached to the
    preceding piece so the pieces tile the interval exactly."""
    spans = []
    start = lo
    pos = body.find(sep, lo, hi)
    while pos != -1:
        cut = pos + len(sep)
        if cut < hi:
            spans.append((start, cut))
            start = cut
        pos = body.find(sep, cut, hi)
    spans.append((start, hi))
    return spans


def _merge_spans(
    spans: list[tuple[int, int]], chunk_size: int, overlap: int
) -> list[tuple[int, int]]:
    """Greedily merge adjacent spans up to chunk_size; when a chunk closes,
    the next one starts ``overlap`` characters back into its tail if that
    still fits."""
    merged = []
    cur_start, cur_end = spans[0]
    for s, e in spans[1:]:
        if e - cur_start <= chunk_size:
            cur_end = e
            continue
        merged.append((cur_start, cur_end))
        back_start = max(cur_start, min(s, cur_end - overlap))
        cur_start = back_start if e - back_start <= chunk_size else s
        cur_end = e
    merged.append((cur_start, cur_end))
    return merged


def _split_spans(
    body: str, lo: int, hi: int, separators: tuple[str, ...], chunk_size: int, overlap: int
) -> list[tuple[int, int]]:
    if hi - lo <= chunk_size:
        return [(lo, hi)]
    for i, sep in enumerate(separators):
        if sep == "":
            return _window_spans(lo, hi, chunk_size, overlap)
        pieces = _split_on_separator(body, lo, hi, sep)
        if len(pieces) <= 1:
            continue
        finer = separators[i + 1 :]
        refined: list[tuple[int, int]] = []
        for s, e in pieces:
            if e - s > chunk_size:
                refined.extend(_split_spans(body, s, e, finer, chunk_size, overlap))
            else:
                refined.append((s, e))
        return _merge_spans(refined, chunk_size, overlap)
    # No separator split the segment; character windows are the last resort.
    return _window_spans(lo, hi, chunk_size, overlap)


def _chunks_from_spans(
    body: str, spans: Iterable[tuple[int, int]], doc_id: str, meta: DocumentMeta
) -> list[Chunk]:
    return [
        Chunk(
            chunk_id=chunk_id_for(doc_id, s, e),
            doc_id=doc_id,
            text=body[s:e],
            start=s,
            end=e,
            meta=meta,
        )
        for s, e in spans
    ]


_ANON_META = DocumentMeta(arxiv_id="unassigned")


def split_recursive(
    body: str,
    cfg: ChunkConfig,
    doc_id: str = "",
    meta: DocumentMeta | None = None,
) -> list[Chunk]:
    """Split text into chunks of at most cfg.chunk_size characters.

    Separators are tried coarsest-first; a segment splits on the first
    separator it actually contains, oversized pieces recurse on the finer
    separators, and adjacent small pieces merge back up to chunk_size with
    the configured overlap carried from the previous chunk's tail. Inputs
    containing no separator at all degrade to fixed sliding windows, so
    consecutive spans overlap by exactly cfg.overlap.
    """
    if not body:
        return []
    spans = _split_spans(body, 0, len(body), tuple(cfg.separators), cfg.chunk_size, cfg.overlap)
    return _chunks_from_spans(body, spans, doc_id, meta or _ANON_META)


_BEGIN_RE = re.compile(r"\\begin\{([^{}]+)\}")
_END_RE = re.compile(r"\\end\{([^{}]+)\}")


def _latex_boundaries(body: str, tag_set: tuple[str, ...]) -> tuple[list[int], int | None]:
    """Scan for segment boundaries at environment depth 0.

    Boundaries: structural commands from tag_set, the start of a top-level
    environment, and the position just after its matching end. Returns the
    boundary list plus the position where balance scanning failed (None if
    the document is well formed); boundaries past that point are discarded.
    """
    commands = [re.compile(r"\\" + re.escape(tag) + r"\*?\s*\{") for tag in tag_set]
    events: list[tuple[int, str, str, int]] = []  # (pos, kind, name, end_pos)
    for m in _BEGIN_RE.finditer(body):
        events.append((m.start(), "begin", m.group(1), m.end()))
    for m in _END_RE.finditer(body):
        events.append((m.start(), "end", m.group(1), m.end()))
    for cmd in commands:
        for m in cmd.finditer(body):
            events.append((m.start(), "cmd", "", m.end()))
    events.sort()

    boundaries: list[int] = []
    stack: list[tuple[str, int]] = []
    for pos, kind, name, end_pos in events:
        if kind == "begin":
            if not stack:
                boundaries.append(pos)
            stack.append((name, pos))
        elif kind == "end":
            if not stack or stack[-1][0] != name:
                return [b for b in boundaries if b < pos], pos
            stack.pop()
            if not stack:
                boundaries.append(end_pos)
        else:
            if not stack:
                boundaries.append(pos)
    if stack:
        fail_at = stack[0][1]
        return [b for b in boundaries if b < fail_at], fail_at
    return boundaries, None


def split_latex(
    body: str,
    cfg: ChunkConfig,
    tag_set: tuple[str, ...] = DEFAULT_LATEX_TAGS,
    doc_id: str = "",
    meta: DocumentMeta | None = None,
) -> list[Chunk]:
    """Split LaTeX source at structural tag boundaries.

    Tag-level boundaries never fall inside an environment; any segment still
    longer than chunk_size is re-split with split_recursive. Unbalanced
    delimiters emit a MalformedLatex warning and the offending span (from
    the failure point to the end) falls back to character splitting.
    """
    if not tag_set:
        raise ValueError("tag_set must be nonempty")
    if not body:
        return []
    boundaries, fail_at = _latex_boundaries(body, tuple(tag_set))
    if fail_at is not None:
        warnings.warn(MalformedLatex(fail_at, len(body), "falling back to recursive split"))

    scan_end = len(body) if fail_at is None else fail_at
    cuts = sorted({b for b in boundaries if 0 < b < scan_end})
    edges = [0, *cuts, scan_end]
    spans: list[tuple[int, int]] = []
    for s, e in zip(edges, edges[1:]):
        if e - s <= 0:
            continue
        if e - s <= cfg.chunk_size:
            spans.append((s, e))
        else:
            spans.extend(
                _split_spans(body, s, e, tuple(cfg.separators), cfg.chunk_size, cfg.overlap)
            )
    if fail_at is not None and fail_at < len(body):
        spans.extend(
            _split_spans(body, fail_at, len(body), tuple(cfg.separators), cfg.chunk_size, cfg.overlap)
        )
    return _chunks_from_spans(body, spans, doc_id, meta or _ANON_META)


def ingest_document(doc: SourceDocument, cfg: ChunkConfig) -> list[Chunk]:
    """Chunk one document, tagging every chunk with the document's metadata."""
    if doc.kind == "latex":
        return split_latex(doc.body, cfg, doc_id=doc.doc_id, meta=doc.meta)
    return split_recursive(doc.body, cfg, doc_id=doc.doc_id, meta=doc.meta)


def load_manifest(path: str | Path) -> list[SourceDocument]:
    """Read a corpus manifest (one JSON record per line: path, doc_id,
    arxiv_id, primary_category, optional kind) and load the documents."""
    manifest_path = Path(path)
    docs = []
    base = manifest_path.parent
    for line_no, line in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        doc_path = Path(rec["path"])
        if not doc_path.is_absolute():
            doc_path = base / doc_path
        kind = rec.get("kind") or ("latex" if doc_path.suffix == ".tex" else "plain_text")
        docs.append(
            SourceDocument(
                doc_id=rec.get("doc_id") or doc_path.stem,
                kind=kind,
                body=doc_path.read_text(encoding="utf-8"),
                meta=DocumentMeta(
                    arxiv_id=rec["arxiv_id"],
                    primary_category=rec.get("primary_category", ""),
                    extra={k: str(v) for k, v in rec.get("extra", {}).items()},
                ),
            )
        )
    return docs


def write_chunk_dump(chunks: Iterable[Chunk], path: str | Path) -> int:
    """Write chunks as line-delimited JSON; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def read_chunk_dump(path: str | Path) -> Iterator[Chunk]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield Chunk.from_dict(json.loads(line))
