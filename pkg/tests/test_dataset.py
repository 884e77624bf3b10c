from __future__ import annotations

import json
import random

import pytest

from conftest import corpus_documents
from ragkit.dataset import (
    Dataset,
    DatasetStore,
    QAPair,
    export_dataset,
    generate_qa,
    pick_unexplored,
    qa_id_for,
    read_export,
    replay_events,
    review_update,
    validate_qa,
)
from ragkit.errors import (
    EmptyExport,
    GenerationExhausted,
    InvalidTransition,
    UnknownItem,
    ValidationFailed,
)
from ragkit.llm import LlmConfig, ScriptedLlm, ScriptedRule

LLM_CFG = LlmConfig(backend="scripted")

QA_OBJ = {
    "question": "What tracker is proposed, what is its momentum range, and what resolution does it reach?",
    "num_claims": 3,
    "claims": [
        "A silicon vertex tracker is proposed.",
        "It covers 0.2 to 10 GeV/c.",
        "Momentum resolution stays below two percent.",
    ],
    "claim_answers": [
        "The proposal is a silicon vertex tracking detector.",
        "The covered momentum range is 0.2 to 10 GeV/c.",
        "The resolution is below two percent.",
    ],
    "full_answer": (
        "A silicon vertex tracking detector is proposed, covering 0.2 to 10 GeV/c "
        "with momentum resolution below two percent."
    ),
}

QA_OBJ_2 = {
    "question": "Which material does the calorimeter use?",
    "num_claims": 1,
    "claims": ["The calorimeter uses tungsten powder."],
    "claim_answers": ["It uses tungsten powder with scintillating fibres."],
    "full_answer": "The barrel calorimeter uses tungsten powder with scintillating fibres.",
}


def fixed_clock():
    return 1_700_000_000.0


class TestValidateQa:
    def _raw(self, **overrides):
        raw = {**QA_OBJ, "source_arxiv_id": "2301.00001"}
        raw.update(overrides)
        return raw

    def test_well_formed(self):
        qa, violations = validate_qa(self._raw())
        assert violations == []
        assert qa.num_claims == 3
        assert qa.qa_id.startswith("qa-")

    def test_claim_count_mismatch(self):
        qa, violations = validate_qa(self._raw(claims=QA_OBJ["claims"][:2]))
        assert qa is None
        assert any("claim count mismatch" in v for v in violations)

    def test_empty_full_answer(self):
        qa, violations = validate_qa(self._raw(full_answer="  "))
        assert qa is None
        assert "empty full_answer" in violations

    def test_missing_field(self):
        raw = self._raw()
        del raw["claims"]
        qa, violations = validate_qa(raw)
        assert qa is None
        assert "missing field: claims" in violations

    def test_deterministic_qa_id(self):
        a, _ = validate_qa(self._raw())
        b, _ = validate_qa(self._raw())
        assert a.qa_id == b.qa_id == qa_id_for("2301.00001", a.question, a.claims)


def doc():
    return corpus_documents()[0]


def scripted(obj=QA_OBJ, **kw):
    return ScriptedLlm([ScriptedRule("", json.dumps(obj), **kw)])


class TestGenerateQa:
    def test_single_item(self, registry):
        items, retries = generate_qa(
            doc(), 1, 3, scripted(), LLM_CFG, registry, clock=fixed_clock
        )
        assert retries == 0
        assert len(items) == 1
        assert items[0].num_claims == 3
        assert items[0].source_arxiv_id == "2301.00001"
        assert items[0].status == "generated"

    def test_malformed_then_valid_retries_once(self, registry):
        client = ScriptedLlm(
            [
                ScriptedRule("", "not json at all", uses=1),
                ScriptedRule("", json.dumps(QA_OBJ)),
            ]
        )
        items, retries = generate_qa(doc(), 1, 3, client, LLM_CFG, registry, clock=fixed_clock)
        assert len(items) == 1
        assert retries == 1

    def test_two_items_carry_source_id(self, registry):
        second = {
            **QA_OBJ,
            "question": "What does the time projection chamber provide?",
            "claims": ["c1", "c2", "c3"],
            "claim_answers": ["a1", "a2", "a3"],
        }
        client = ScriptedLlm(
            [
                ScriptedRule("", json.dumps(QA_OBJ), uses=1),
                ScriptedRule("", json.dumps(second)),
            ]
        )
        items, _ = generate_qa(doc(), 2, 3, client, LLM_CFG, registry, clock=fixed_clock)
        assert len(items) == 2
        assert all(i.source_arxiv_id == "2301.00001" for i in items)
        assert items[0].qa_id != items[1].qa_id

    def test_exhaustion_returns_partial(self, registry):
        client = ScriptedLlm([ScriptedRule("", "garbage")])
        with pytest.raises(GenerationExhausted) as exc_info:
            generate_qa(doc(), 2, 3, client, LLM_CFG, registry, clock=fixed_clock)
        assert exc_info.value.items == []

    def test_scripted_generation_is_deterministic(self, registry):
        runs = []
        for _ in range(2):
            items, _ = generate_qa(
                doc(), 1, 3, scripted(), LLM_CFG, registry, clock=fixed_clock
            )
            runs.append([i.to_dict() for i in items])
        assert runs[0] == runs[1]

    def test_wrong_claim_count_rejected(self, registry):
        items_obj = {**QA_OBJ, "num_claims": 2, "claims": QA_OBJ["claims"][:2],
                     "claim_answers": QA_OBJ["claim_answers"][:2]}
        with pytest.raises(GenerationExhausted):
            generate_qa(doc(), 1, 3, scripted(items_obj), LLM_CFG, registry,
                        clock=fixed_clock)


def build_dataset(*objs, clock=fixed_clock) -> Dataset:
    dataset = Dataset(dataset_id="bench", name="bench")
    for obj in objs:
        qa, violations = validate_qa({**obj, "source_arxiv_id": "2301.00001",
                                      "created_at": clock()})
        assert not violations
        dataset.items[qa.qa_id] = qa
        dataset.version += 1
    return dataset


class TestReviewUpdate:
    def test_accept(self):
        dataset = build_dataset(QA_OBJ)
        qa_id = next(iter(dataset.items))
        v0 = dataset.version
        updated = review_update(dataset, qa_id, "accept", "alice", clock=fixed_clock)
        assert updated.status == "accepted"
        assert updated.annotator == "alice"
        assert updated.reviewed_at == fixed_clock()
        assert dataset.version == v0 + 1

    def test_edit_revalidates_and_keeps_id(self):
        dataset = build_dataset(QA_OBJ)
        qa_id = next(iter(dataset.items))
        updated = review_update(
            dataset, qa_id, "edit", "bob",
            payload={"full_answer": "A corrected complete answer."},
            clock=fixed_clock,
        )
        assert updated.status == "edited"
        assert updated.qa_id == qa_id
        assert updated.full_answer == "A corrected complete answer."

    def test_edit_claim_count_mismatch_rejected(self):
        dataset = build_dataset(QA_OBJ)
        qa_id = next(iter(dataset.items))
        before = dataset.items[qa_id]
        v0 = dataset.version
        with pytest.raises(ValidationFailed):
            review_update(
                dataset, qa_id, "edit", "bob",
                payload={"claims": ["only one claim"]},
                clock=fixed_clock,
            )
        assert dataset.items[qa_id] == before
        assert dataset.version == v0

    def test_unknown_item(self):
        dataset = build_dataset(QA_OBJ)
        with pytest.raises(UnknownItem):
            review_update(dataset, "qa-missing", "accept", "alice", clock=fixed_clock)

    def test_reject_accepted_needs_force(self):
        dataset = build_dataset(QA_OBJ)
        qa_id = next(iter(dataset.items))
        review_update(dataset, qa_id, "accept", "alice", clock=fixed_clock)
        with pytest.raises(InvalidTransition):
            review_update(dataset, qa_id, "reject", "alice", clock=fixed_clock)
        updated = review_update(dataset, qa_id, "reject", "alice", force=True,
                                clock=fixed_clock)
        assert updated.status == "rejected"


class TestExport:
    def test_includes_only_selected_statuses(self, tmp_path):
        dataset = build_dataset(QA_OBJ, QA_OBJ_2)
        ids = sorted(dataset.items)
        review_update(dataset, ids[0], "accept", "alice", clock=fixed_clock)
        review_update(dataset, ids[1], "reject", "alice", clock=fixed_clock)
        rows = export_dataset(dataset, path=tmp_path / "out.jsonl")
        assert len(rows) == 1
        assert rows[0]["qa_id"] == ids[0]

    def test_unreviewed_excluded_by_default(self):
        dataset = build_dataset(QA_OBJ)
        with pytest.warns(EmptyExport):
            rows = export_dataset(dataset)
        assert rows == []

    def test_reexport_byte_identical(self, tmp_path):
        dataset = build_dataset(QA_OBJ, QA_OBJ_2)
        for qa_id in list(dataset.items):
            review_update(dataset, qa_id, "accept", "alice", clock=fixed_clock)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_dataset(dataset, path=p1)
        export_dataset(dataset, path=p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_read_export_roundtrip(self, tmp_path):
        dataset = build_dataset(QA_OBJ)
        qa_id = next(iter(dataset.items))
        review_update(dataset, qa_id, "accept", "alice", clock=fixed_clock)
        path = tmp_path / "out.jsonl"
        export_dataset(dataset, path=path)
        items = read_export(path)
        assert items[0] == dataset.items[qa_id]


class TestDatasetStore:
    def test_log_replay_reproduces_state(self, tmp_path):
        store = DatasetStore(tmp_path, clock=fixed_clock)
        store.create("bench", "bench")
        items, _ = generate_qa(doc(), 1, 3, scripted(), LLM_CFG, clock=fixed_clock)
        store.add_items("bench", items)
        store.review("bench", items[0].qa_id, "accept", "alice")
        live = store.get("bench")

        replayed = replay_events(
            json.loads(line)
            for line in (tmp_path / "bench.log").read_text().splitlines()
            if line.strip()
        )
        assert replayed.version == live.version
        assert {k: v.to_dict() for k, v in replayed.items.items()} == {
            k: v.to_dict() for k, v in live.items.items()
        }

    def test_fresh_store_sees_persisted_state(self, tmp_path):
        store = DatasetStore(tmp_path, clock=fixed_clock)
        store.create("bench")
        items, _ = generate_qa(doc(), 1, 3, scripted(), LLM_CFG, clock=fixed_clock)
        store.add_items("bench", items)
        fresh = DatasetStore(tmp_path, clock=fixed_clock)
        assert fresh.get("bench").version == store.get("bench").version

    def test_version_strictly_increases(self, tmp_path):
        store = DatasetStore(tmp_path, clock=fixed_clock)
        store.create("bench")
        versions = [store.get("bench").version]
        items, _ = generate_qa(doc(), 1, 3, scripted(), LLM_CFG, clock=fixed_clock)
        store.add_items("bench", items)
        versions.append(store.get("bench").version)
        store.review("bench", items[0].qa_id, "accept", "a")
        versions.append(store.get("bench").version)
        assert versions == sorted(set(versions))

    def test_unknown_dataset(self, tmp_path):
        with pytest.raises(UnknownItem):
            DatasetStore(tmp_path).get("ghost")


class TestPickUnexplored:
    def test_prefers_uncovered_docs(self):
        docs = corpus_documents()
        dataset = build_dataset(QA_OBJ)  # covers 2301.00001
        rng = random.Random(1)
        for _ in range(10):
            choice = pick_unexplored(docs, dataset, rng)
            assert choice.meta.arxiv_id != "2301.00001"

    def test_none_when_all_covered(self):
        docs = [corpus_documents()[0]]
        dataset = build_dataset(QA_OBJ)
        assert pick_unexplored(docs, dataset, random.Random(0)) is None

    def test_seeded_choice_reproducible(self):
        docs = corpus_documents()
        dataset = Dataset(dataset_id="d", name="d")
        a = pick_unexplored(docs, dataset, random.Random(42))
        b = pick_unexplored(docs, dataset, random.Random(42))
        assert a.doc_id == b.doc_id
