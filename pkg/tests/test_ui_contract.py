"""Keeps the frontend's recorded service fixtures honest: regenerating them
against the live service must reproduce the committed file (timestamps are
the only volatile fields and are normalized)."""

from __future__ import annotations

import copy
import json
import sys
from pathlib import Path

import pytest

REPO = Path(__file__).parent.parent
FIXTURE_PATH = REPO / "frontend" / "tests" / "fixtures" / "service_fixtures.json"

sys.path.insert(0, str(REPO / "scripts"))


def normalize(obj):
    """Zero out wall-clock fields anywhere in the structure."""
    obj = copy.deepcopy(obj)

    def walk(node):
        if isinstance(node, dict):
            for key in ("started_at", "ended_at", "created_at", "reviewed_at", "at"):
                if key in node and isinstance(node[key], (int, float)):
                    node[key] = 0
            for value in node.values():
                walk(value)
        elif isinstance(node, list):
            for value in node:
                walk(value)

    walk(obj)
    return obj


def normalize_export(text: str) -> list[dict]:
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [normalize(r) for r in rows]


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_recorded_fixtures_match_live_service():
    from record_ui_fixtures import record

    assert FIXTURE_PATH.exists(), "run scripts/record_ui_fixtures.py first"
    committed = json.loads(FIXTURE_PATH.read_text(encoding="utf-8"))
    fresh = record()

    committed_export = normalize_export(committed.pop("export"))
    fresh_export = normalize_export(fresh.pop("export"))
    assert fresh_export == committed_export

    assert normalize(fresh) == normalize(committed)
