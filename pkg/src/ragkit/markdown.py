"""GitHub-flavored markdown checks for chain output, plus a total repair pass.

The validator defines the accepted subset: balanced ``` fences, balanced
inline backticks per line, bracket-paren links with nonempty URLs, no
control characters, and a terminal "Sources" block listing every inline
citation. repair_markdown is total: validate(repair(text)) holds for any
input, which is what makes the rendered-output guarantee enforceable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# New-style (2301.01234, optional version) and old-style (hep-ph/0703123)
# arXiv identifiers.
ARXIV_ID_PATTERN = r"(?:\d{4}\.\d{4,5}(?:v\d+)?|[a-z][a-z-]*(?:\.[A-Z]{2})?/\d{7})"

_CITATION_RE = re.compile(r"(?<!\\)\[(" + ARXIV_ID_PATTERN + r")\](?!\()")
_LINK_RE = re.compile(r"(?<!\\)\[([^\]\n]*)\]\(([^)\n]*)\)")
_BACKTICK_RE = re.compile(r"(?<!\\)`")
_SOURCES_HEADING_RE = re.compile(r"^#{1,6}\s+Sources\s*$")

ARXIV_ABS_URL = "https://arxiv.org/abs/{id}"


@dataclass(frozen=True)
class MarkdownReport:
    ok: bool
    violations: tuple[str, ...]


def _is_fence_marker(line: str) -> bool:
    return line.lstrip().startswith("```")


def _fence_map(lines: list[str]) -> tuple[list[bool], bool]:
    """Per-line flag: is this line inside (or a marker of) a fenced block?
    Also returns whether a fence is left open at EOF."""
    flags = []
    open_fence = False
    for line in lines:
        if _is_fence_marker(line):
            flags.append(True)
            open_fence = not open_fence
        else:
            flags.append(open_fence)
    return flags, open_fence


def _control_chars(text: str) -> bool:
    return any((ord(c) < 32 and c not in "\n\t") or ord(c) == 127 for c in text)


def _plain_lines(text: str) -> list[tuple[int, str]]:
    """(index, line) pairs for lines outside fenced code blocks."""
    lines = text.split("\n")
    fenced, _ = _fence_map(lines)
    return [(i, line) for i, (line, is_fenced) in enumerate(zip(lines, fenced)) if not is_fenced]


def extract_citations(text: str) -> list[str]:
    """Inline [arxiv_id] markers outside code fences, deduplicated in order
    of first appearance. Bracket-paren links do not count as citations."""
    seen: list[str] = []
    for _, line in _plain_lines(text):
        for m in _CITATION_RE.finditer(line):
            if m.group(1) not in seen:
                seen.append(m.group(1))
    return seen


def _sources_segment(text: str) -> str | None:
    """Text from the last non-fenced Sources heading to the end, or None."""
    lines = text.split("\n")
    fenced, _ = _fence_map(lines)
    heading_at = None
    for i, line in enumerate(lines):
        if not fenced[i] and _SOURCES_HEADING_RE.match(line):
            heading_at = i
    if heading_at is None:
        return None
    return "\n".join(lines[heading_at:])


def validate_markdown(text: str) -> MarkdownReport:
    violations: list[str] = []
    if _control_chars(text):
        violations.append("control character")

    lines = text.split("\n")
    _, open_fence = _fence_map(lines)
    if open_fence:
        violations.append("unbalanced fence")

    for i, line in _plain_lines(text):
        if len(_BACKTICK_RE.findall(line)) % 2 == 1:
            violations.append(f"unbalanced inline code on line {i + 1}")
        for m in _LINK_RE.finditer(line):
            if not m.group(2).strip():
                violations.append(f"empty link url on line {i + 1}")

    cited = extract_citations(text)
    if cited:
        segment = _sources_segment(text)
        if segment is None:
            violations.append("missing sources block")
        else:
            for cid in cited:
                if f"[{cid}]" not in segment:
                    violations.append(f"missing source entry: {cid}")
    return MarkdownReport(ok=not violations, violations=tuple(violations))


def build_sources_block(ids: list[str]) -> str:
    entries = "\n".join(f"- [{cid}]({ARXIV_ABS_URL.format(id=cid)})" for cid in ids)
    return f"## Sources\n\n{entries}"


def _repair_line_backticks(line: str) -> str:
    ticks = list(_BACKTICK_RE.finditer(line))
    if len(ticks) % 2 == 0:
        return line
    last = ticks[-1]
    return line[: last.start()] + "\\" + line[last.start() :]


def _repair_links(line: str) -> str:
    def fix(m: re.Match) -> str:
        if m.group(2).strip():
            return m.group(0)
        return "\\[" + m.group(1) + "\\]"

    return _LINK_RE.sub(fix, line)


def repair_markdown(text: str) -> str:
    """Deterministic local repair: strip control characters, close open
    fences, escape stray backticks and empty-URL links, and append any
    missing Sources entries. Output always passes validate_markdown."""
    text = "".join(
        c for c in text if not ((ord(c) < 32 and c not in "\n\t") or ord(c) == 127)
    )

    lines = text.split("\n")
    _, open_fence = _fence_map(lines)
    if open_fence:
        lines.append("```")

    fenced, _ = _fence_map(lines)
    for i, line in enumerate(lines):
        if fenced[i] or _is_fence_marker(line):
            continue
        lines[i] = _repair_line_backticks(_repair_links(line))
    text = "\n".join(lines)

    cited = extract_citations(text)
    if cited:
        segment = _sources_segment(text)
        if segment is None:
            text = text.rstrip("\n") + "\n\n" + build_sources_block(cited) + "\n"
        else:
            missing = [cid for cid in cited if f"[{cid}]" not in segment]
            if missing:
                entries = "\n".join(
                    f"- [{cid}]({ARXIV_ABS_URL.format(id=cid)})" for cid in missing
                )
                text = text.rstrip("\n") + "\n" + entries + "\n"
    return text
