"""Record deterministic service responses into the frontend test fixtures.

The browser tests replay these against a stub server, so the UI is tested
against the exact JSON the real service emits. Re-run after changing the
service wire format:

    python3 scripts/record_ui_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "tests"))

from fastapi.testclient import TestClient

from conftest import make_workspace
from ragkit.app import Engine
from ragkit.config import AppConfig
from ragkit.service import create_app

FIXTURE_PATH = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" / "service_fixtures.json"

CHAT_QUESTION = "What momentum range does the tracking detector cover?"


def record() -> dict:
    root = Path(tempfile.mkdtemp(prefix="ragkit-fixture-"))
    config_path = make_workspace(root)
    engine = Engine(AppConfig.from_file(config_path))
    client = TestClient(create_app(engine))

    client.post("/ingest", json={"manifest": str(root / "manifest.jsonl")})

    chat = client.post("/chat", json={"question": CHAT_QUESTION}).json()
    trace = client.get(f"/traces/{chat['trace_id']}").json()
    documents = client.get("/documents").json()

    generated = client.post(
        "/datasets/bench/generate",
        json={"doc_ref": "tracker", "n_questions": 1, "claims_per_question": 3},
    ).json()
    qa_id = generated["generated"][0]["qa_id"]
    mismatch = client.post(
        f"/datasets/bench/items/{qa_id}/review",
        json={"action": "edit", "payload": {"claims": ["only one"]}},
    )
    accepted = client.post(
        f"/datasets/bench/items/{qa_id}/review",
        json={"action": "accept", "annotator": "web"},
    ).json()
    dataset = client.get("/datasets/bench").json()
    export = client.get("/datasets/bench/export").text

    return {
        "chat_question": CHAT_QUESTION,
        "chat": chat,
        "trace": trace,
        "documents": documents,
        "generated": generated,
        "review_mismatch": {"status": mismatch.status_code, "body": mismatch.json()},
        "review_accepted": accepted,
        "dataset": dataset,
        "export": export,
    }


def main() -> int:
    fixtures = record()
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE_PATH.write_text(
        json.dumps(fixtures, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {FIXTURE_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
