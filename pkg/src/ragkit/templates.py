"""Prompt templates as data: versioned plain-text files with named slots.

A template file is a sequence of ``--- name ---`` sections. The ``meta``
section carries ``id`` and ``version``; other sections hold text with
``{{slot}}`` placeholders. Few-shot pairs live in a ``few_shot`` section,
entries separated by ``===`` lines with ``Q:`` / ``A:`` markers. Braces in
section bodies are plain text, so prompts may contain JSON examples.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import UnknownTemplate

_SECTION_RE = re.compile(r"^---\s*([a-z_]+)\s*---\s*$")
_SLOT_RE = re.compile(r"\{\{(\w+)\}\}")


@dataclass(frozen=True)
class Template:
    template_id: str
    version: int
    sections: dict[str, str]
    few_shot: tuple[tuple[str, str], ...] = ()

    def render(self, section: str, **slots: str) -> str:
        if section not in self.sections:
            raise KeyError(f"template {self.template_id} has no section {section!r}")
        body = self.sections[section]

        def fill(m: re.Match) -> str:
            name = m.group(1)
            if name not in slots:
                raise KeyError(f"template {self.template_id}: unfilled slot {{{{{name}}}}}")
            return slots[name]

        return _SLOT_RE.sub(fill, body)


def _parse_few_shot(body: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for block in re.split(r"^===\s*$", body, flags=re.MULTILINE):
        block = block.strip()
        if not block:
            continue
        m = re.match(r"Q:\s*(.*?)\nA:\s*(.*)", block, flags=re.DOTALL)
        if not m:
            raise ValueError(f"malformed few_shot block: {block[:60]!r}")
        pairs.append((m.group(1).strip(), m.group(2).strip()))
    return tuple(pairs)


def parse_template(text: str, source: str = "<string>") -> Template:
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.split("\n"):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1)
            sections.setdefault(current, [])
            continue
        if current is not None:
            sections[current].append(line)
    if "meta" not in sections:
        raise ValueError(f"{source}: template has no meta section")
    meta = {}
    for line in sections["meta"]:
        if ":" in line:
            key, _, value = line.partition(":")
            meta[key.strip()] = value.strip()
    if "id" not in meta:
        raise ValueError(f"{source}: meta section missing id")
    bodies = {name: "\n".join(lines).strip() for name, lines in sections.items() if name != "meta"}
    few_shot = _parse_few_shot(bodies.pop("few_shot", ""))
    return Template(
        template_id=meta["id"],
        version=int(meta.get("version", 1)),
        sections=bodies,
        few_shot=few_shot,
    )


@dataclass
class TemplateRegistry:
    templates: dict[str, Template] = field(default_factory=dict)

    def add(self, template: Template) -> None:
        self.templates[template.template_id] = template

    def get(self, template_id: str) -> Template:
        if template_id not in self.templates:
            raise UnknownTemplate(
                f"template {template_id!r} not in registry "
                f"(have: {', '.join(sorted(self.templates)) or 'none'})"
            )
        return self.templates[template_id]

    def __contains__(self, template_id: str) -> bool:
        return template_id in self.templates

    @classmethod
    def from_dir(cls, path: str | Path) -> "TemplateRegistry":
        registry = cls()
        for file in sorted(Path(path).glob("*.tmpl")):
            registry.add(parse_template(file.read_text(encoding="utf-8"), source=str(file)))
        return registry

    @classmethod
    def default(cls) -> "TemplateRegistry":
        """Registry built from the template files shipped with the package."""
        registry = cls()
        root = resources.files("ragkit") / "templates"
        for file in sorted(root.iterdir(), key=lambda f: f.name):
            if file.name.endswith(".tmpl"):
                registry.add(parse_template(file.read_text(encoding="utf-8"), source=file.name))
        return registry
