from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from conftest import make_workspace
from ragkit.app import Engine
from ragkit.config import AppConfig
from ragkit.service import create_app


@pytest.fixture()
def engine(tmp_path) -> Engine:
    config_path = make_workspace(tmp_path)
    return Engine(AppConfig.from_file(config_path))


@pytest.fixture()
def client(engine) -> TestClient:
    return TestClient(create_app(engine))


def ingest(client, tmp_path):
    resp = client.post("/ingest", json={"manifest": str(tmp_path / "manifest.jsonl")})
    assert resp.status_code == 200
    return resp.json()


class TestChat:
    def test_empty_question_400(self, client):
        resp = client.post("/chat", json={"question": "   "})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "empty_question"
        assert body["message"] == "empty question"

    def test_chat_round_trip_with_trace(self, client, tmp_path):
        ingest(client, tmp_path)
        resp = client.post(
            "/chat",
            json={"question": "What momentum range does the tracking detector cover?"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["used_retrieval"] is True
        assert body["trace_id"].startswith("tr-")

        trace = client.get(f"/traces/{body['trace_id']}")
        assert trace.status_code == 200
        steps = [s["name"] for s in trace.json()["steps"]]
        assert steps == ["decide", "retrieve", "generate", "rewrite"]

    def test_chat_respects_retrieval_config(self, client, tmp_path):
        ingest(client, tmp_path)
        resp = client.post(
            "/chat",
            json={
                "question": "How does the calorimeter perform?",
                "retrieval_config": {"metric": "cosine", "mode": "mmr", "k": 2,
                                     "fetch_k": 8, "mmr_lambda": 0.4},
            },
        )
        assert resp.status_code == 200

    def test_invalid_retrieval_config_400(self, client):
        resp = client.post(
            "/chat", json={"question": "q", "retrieval_config": {"metric": "bogus"}}
        )
        assert resp.status_code == 400


class TestTraces:
    def test_unknown_trace_404(self, client):
        resp = client.get("/traces/tr-ghost")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_trace"

    def test_archived_trace_410_with_pointer(self, client, engine, tmp_path):
        ingest(client, tmp_path)
        body = client.post("/chat", json={"question": "what is the tracker?"}).json()
        # age the trace far past retention, then sweep
        far_future = engine.clock() + 60 * 86400.0
        swept = client.post("/admin/sweep", json={"now": far_future})
        assert swept.json()["archived"] >= 1
        resp = client.get(f"/traces/{body['trace_id']}")
        assert resp.status_code == 410
        payload = resp.json()
        assert payload["code"] == "trace_archived"
        assert payload["archive_path"].endswith("archive.log")


class TestIngestEndpoint:
    def test_manifest_ingest_counts(self, client, tmp_path):
        counts = ingest(client, tmp_path)
        assert counts["documents"] == 3
        assert counts["stored"] == counts["chunks"]

    def test_inline_documents(self, client):
        resp = client.post(
            "/ingest",
            json={
                "documents": [
                    {
                        "doc_id": "inline",
                        "body": "Inline document body about detectors.",
                        "arxiv_id": "2304.00004",
                    }
                ]
            },
        )
        assert resp.status_code == 200
        assert resp.json()["documents"] == 1

    def test_neither_manifest_nor_documents_400(self, client):
        resp = client.post("/ingest", json={})
        assert resp.status_code == 400


class TestDatasetEndpoints:
    def _generate(self, client):
        resp = client.post(
            "/datasets/bench/generate",
            json={"doc_ref": "tracker", "n_questions": 1, "claims_per_question": 3},
        )
        assert resp.status_code == 200
        return resp.json()["generated"][0]

    def test_generate_items(self, client):
        item = self._generate(client)
        assert item["status"] == "generated"
        assert item["num_claims"] == 3

    def test_generate_unknown_doc_404(self, client):
        resp = client.post(
            "/datasets/bench/generate",
            json={"doc_ref": "ghost", "n_questions": 1, "claims_per_question": 3},
        )
        assert resp.status_code == 404

    def test_review_accept_then_export(self, client):
        item = self._generate(client)
        resp = client.post(
            f"/datasets/bench/items/{item['qa_id']}/review",
            json={"action": "accept", "annotator": "alice"},
        )
        assert resp.status_code == 200
        assert resp.json()["item"]["status"] == "accepted"

        export = client.get("/datasets/bench/export")
        assert export.status_code == 200
        lines = [ln for ln in export.text.splitlines() if ln.strip()]
        assert len(lines) == 1
        assert json.loads(lines[0])["qa_id"] == item["qa_id"]

    def test_review_claim_mismatch_400_with_violations(self, client):
        item = self._generate(client)
        resp = client.post(
            f"/datasets/bench/items/{item['qa_id']}/review",
            json={"action": "edit", "payload": {"claims": ["one"]}},
        )
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "validation_failed"
        assert any("claim count mismatch" in v for v in body["violations"])

    def test_double_review_409(self, client):
        item = self._generate(client)
        url = f"/datasets/bench/items/{item['qa_id']}/review"
        assert client.post(url, json={"action": "accept"}).status_code == 200
        assert client.post(url, json={"action": "reject"}).status_code == 409
        assert client.post(url, json={"action": "reject", "force": True}).status_code == 200

    def test_review_unknown_item_404(self, client):
        self._generate(client)
        resp = client.post(
            "/datasets/bench/items/qa-ghost/review", json={"action": "accept"}
        )
        assert resp.status_code == 404

    def test_dataset_view_lists_items(self, client):
        item = self._generate(client)
        resp = client.get("/datasets/bench")
        assert resp.status_code == 200
        body = resp.json()
        assert body["version"] >= 1
        assert [i["qa_id"] for i in body["items"]] == [item["qa_id"]]


class TestEvalEndpoints:
    def test_run_then_fetch_report(self, client, tmp_path):
        ingest(client, tmp_path)
        item = client.post(
            "/datasets/bench/generate",
            json={"doc_ref": "tracker", "n_questions": 1, "claims_per_question": 3},
        ).json()["generated"][0]
        client.post(
            f"/datasets/bench/items/{item['qa_id']}/review", json={"action": "accept"}
        )
        run = client.post("/eval/run", json={"dataset_id": "bench"})
        assert run.status_code == 200
        report_id = run.json()["report_id"]

        fetched = client.get(f"/eval/{report_id}")
        assert fetched.status_code == 200
        names = {m["name"] for m in fetched.json()["suites"]["standard"]["metrics"]}
        assert {"ORF", "CRR", "CAR", "SCF", "HF"} <= names

    def test_unknown_report_404(self, client):
        assert client.get("/eval/rep-ghost").status_code == 404

    def test_eval_unknown_dataset_404(self, client):
        assert client.post("/eval/run", json={"dataset_id": "ghost"}).status_code == 404


class TestAuthToken:
    def test_bearer_token_enforced(self, tmp_path):
        config_path = make_workspace(tmp_path)
        config = AppConfig.from_file(config_path)
        config.auth_token = "sekrit"
        client = TestClient(create_app(Engine(config)))
        assert client.post("/chat", json={"question": "q"}).status_code == 401
        ok = client.post(
            "/chat",
            json={"question": "hello"},
            headers={"Authorization": "Bearer sekrit"},
        )
        assert ok.status_code == 200
