"""Evaluation of chain runs over a benchmark dataset.

Two suites:
- standard: markdown render rate, claim recognition/accuracy, source
  citation rate, hallucination rate. Frequency metrics carry binomial
  errors sqrt(p(1-p)/n); rate metrics carry the standard deviation of the
  per-question score distribution (sem emitted as auxiliary).
- judged: faithfulness, context relevancy, context entity recall, answer
  relevance, answer correctness, all reported as mean +/- distribution std.

Judges are ordinary chat backends behind structured-verdict prompts with a
retry-on-malformed policy; a judge failure excludes the item from that
metric's sample instead of poisoning the score.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .chain import ChatResponse
from .dataset import QAPair
from .embedding import EmbeddingConfig, embed_batch
from .errors import JoinFailure, JudgeUnavailable, RagkitError
from .llm import LlmClient, LlmConfig, parse_json_object
from .markdown import validate_markdown
from .templates import TemplateRegistry
from .vector_store import similarity

ANSWER_RELEVANCE_PARAPHRASES = 3
ANSWER_CORRECTNESS_WEIGHT = 0.75


@dataclass(frozen=True)
class RunResult:
    qa_id: str
    response: ChatResponse
    retrieved_contexts: tuple[tuple[str, str], ...]  # (chunk text, arxiv_id)
    trace_id: str

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "response": self.response.to_dict(),
            "retrieved_contexts": [list(pair) for pair in self.retrieved_contexts],
            "trace_id": self.trace_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        resp = d["response"]
        return cls(
            qa_id=d["qa_id"],
            response=ChatResponse(
                markdown=resp["markdown"],
                citations=tuple(resp["citations"]),
                trace_id=resp["trace_id"],
                used_retrieval=resp["used_retrieval"],
            ),
            retrieved_contexts=tuple((t, a) for t, a in d["retrieved_contexts"]),
            trace_id=d["trace_id"],
        )


def write_run_results(results: Sequence[RunResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_run_results(path: str | Path) -> list[RunResult]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(RunResult.from_dict(json.loads(line)))
    return out


@dataclass(frozen=True)
class Verdict:
    claim_index: int
    recognized: bool
    correct: bool
    judge_rationale: str = ""

    def __post_init__(self):
        # an unrecognized claim can never be correct
        if self.correct and not self.recognized:
            object.__setattr__(self, "correct", False)


@dataclass(frozen=True)
class MetricEntry:
    name: str
    score: float
    error: float
    error_kind: str  # "binomial" | "distribution_std"
    n: int
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"{self.name}: score {self.score} outside [0, 1]")
        if self.n < 1:
            raise ValueError(f"{self.name}: n must be >= 1")


@dataclass
class MetricReport:
    suite: str
    entries: list[MetricEntry] = field(default_factory=list)

    def get(self, name: str) -> MetricEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "metrics": [
                {
                    "name": e.name,
                    "score": e.score,
                    "error": e.error,
                    "error_kind": e.error_kind,
                    "n": e.n,
                    "aux": e.aux,
                }
                for e in self.entries
            ],
        }


def binomial_error(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _pop_std(xs: Sequence[float]) -> float:
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def _frequency_entry(name: str, successes: int, n: int) -> MetricEntry:
    p = successes / n
    return MetricEntry(name=name, score=p, error=binomial_error(p, n),
                       error_kind="binomial", n=n)


def _rate_entry(name: str, scores: Sequence[float]) -> MetricEntry:
    std = _pop_std(scores)
    return MetricEntry(
        name=name,
        score=_mean(scores),
        error=std,
        error_kind="distribution_std",
        n=len(scores),
        aux={"sem": std / math.sqrt(len(scores))},
    )


def split_sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p for p in (s.strip() for s in parts) if p]


class Judge:
    """Structured-verdict adjudicator over any chat backend."""

    def __init__(
        self,
        client: LlmClient,
        cfg: LlmConfig,
        registry: TemplateRegistry | None = None,
        retries: int = 2,
    ):
        self.client = client
        self.cfg = cfg
        self.registry = registry or TemplateRegistry.default()
        self.retries = retries

    def _ask(self, template_id: str, slots: Mapping[str, str], check) -> object:
        template = self.registry.get(template_id)
        messages = [
            {"role": "system", "content": template.render("system")},
            {"role": "user", "content": template.render("user", **slots)},
        ]
        last = "no attempts made"
        for _ in range(self.retries + 1):
            try:
                raw = parse_json_object(self.client.complete(messages, self.cfg).text)
            except (ValueError, RagkitError) as exc:
                last = str(exc)
                continue
            try:
                return check(raw)
            except (KeyError, TypeError, ValueError) as exc:
                last = f"malformed verdict: {exc}"
        raise JudgeUnavailable(f"{template_id}: {last}")

    def claim_verdicts(self, qa: QAPair, response: ChatResponse) -> list[Verdict]:
        verdicts = []
        for i, (claim, ideal) in enumerate(zip(qa.claims, qa.claim_answers)):
            def check(raw, _i=i):
                if not isinstance(raw.get("recognized"), bool) or not isinstance(
                    raw.get("correct"), bool
                ):
                    raise ValueError("recognized/correct must be booleans")
                return Verdict(
                    claim_index=_i,
                    recognized=raw["recognized"],
                    correct=raw["correct"],
                    judge_rationale=str(raw.get("rationale", "")),
                )

            verdicts.append(
                self._ask(
                    "judge_claim",
                    {
                        "question": qa.question,
                        "claim": claim,
                        "claim_answer": ideal,
                        "answer": response.markdown,
                    },
                    check,
                )
            )
        return verdicts

    def hallucination(self, qa: QAPair, result: RunResult) -> bool:
        context = "\n".join(text for text, _ in result.retrieved_contexts) or "(none)"

        def check(raw):
            if not isinstance(raw.get("hallucination"), bool):
                raise ValueError("hallucination must be a boolean")
            return raw["hallucination"]

        return self._ask(
            "judge_hallucination",
            {
                "context": context,
                "ideal_answer": qa.full_answer,
                "answer": result.response.markdown,
            },
            check,
        )

    def statement_counts(self, result: RunResult) -> tuple[int, int]:
        context = "\n".join(text for text, _ in result.retrieved_contexts) or "(none)"

        def check(raw):
            total = raw["total_statements"]
            supported = raw["supported_statements"]
            if not isinstance(total, int) or not isinstance(supported, int):
                raise ValueError("counts must be integers")
            if total < 0 or not 0 <= supported <= max(total, 0):
                raise ValueError("counts out of range")
            return total, supported

        return self._ask(
            "judge_statements",
            {"context": context, "answer": result.response.markdown},
            check,
        )

    def necessary_sentences(self, qa: QAPair, result: RunResult, sentences: list[str]) -> int:
        numbered = "\n".join(f"{i}: {s}" for i, s in enumerate(sentences))

        def check(raw):
            idx = raw["necessary"]
            if not isinstance(idx, list) or not all(isinstance(i, int) for i in idx):
                raise ValueError("necessary must be a list of integers")
            return len({i for i in idx if 0 <= i < len(sentences)})

        return self._ask(
            "judge_context_sentences",
            {
                "question": qa.question,
                "answer": result.response.markdown,
                "sentences": numbered,
            },
            check,
        )

    def claims_found(self, qa: QAPair, result: RunResult) -> list[bool]:
        context = "\n".join(text for text, _ in result.retrieved_contexts) or "(none)"
        numbered = "\n".join(f"{i}: {c}" for i, c in enumerate(qa.claims))

        def check(raw):
            found = raw["found"]
            if (
                not isinstance(found, list)
                or len(found) != len(qa.claims)
                or not all(isinstance(b, bool) for b in found)
            ):
                raise ValueError("found must be a boolean list matching the claim count")
            return found

        return self._ask(
            "judge_claims_in_context", {"context": context, "claims": numbered}, check
        )

    def paraphrases(self, result: RunResult, count: int) -> list[str]:
        def check(raw):
            questions = raw["questions"]
            if not isinstance(questions, list) or not questions:
                raise ValueError("questions must be a nonempty list")
            return [str(q) for q in questions][:count]

        return self._ask(
            "judge_paraphrase",
            {"answer": result.response.markdown, "count": str(count)},
            check,
        )

    def fact_overlap(self, qa: QAPair, result: RunResult) -> tuple[int, int, int]:
        def check(raw):
            tp, fp, fn = raw["tp"], raw["fp"], raw["fn"]
            if not all(isinstance(x, int) and x >= 0 for x in (tp, fp, fn)):
                raise ValueError("tp/fp/fn must be non-negative integers")
            return tp, fp, fn

        return self._ask(
            "judge_fact_overlap",
            {"reference": qa.full_answer, "answer": result.response.markdown},
            check,
        )


def _join(results: Sequence[RunResult], dataset_items: Mapping[str, QAPair]) -> list[tuple[RunResult, QAPair]]:
    orphans = [r.qa_id for r in results if r.qa_id not in dataset_items]
    if orphans:
        raise JoinFailure(orphans)
    return [(r, dataset_items[r.qa_id]) for r in results]


def eval_standard(
    results: Sequence[RunResult],
    dataset_items: Mapping[str, QAPair],
    judge: Judge,
) -> MetricReport:
    """Markdown render rate (ORF), claim recognition rate (CRR), claim
    accuracy rate (CAR), source citation rate (SCF), hallucination rate (HF).

    ORF and SCF are judge-free and fully deterministic. CAR's denominator is
    recognized claims; questions with zero recognized claims drop out of
    CAR's sample rather than scoring 0. Judge failures exclude the item from
    the affected metric's n."""
    if not results:
        raise ValueError("no results to evaluate")
    joined = _join(results, dataset_items)

    report = MetricReport(suite="standard")
    rendered = sum(1 for r, _ in joined if validate_markdown(r.response.markdown).ok)
    report.entries.append(_frequency_entry("ORF", rendered, len(joined)))

    crr_scores: list[float] = []
    car_scores: list[float] = []
    for result, qa in joined:
        try:
            verdicts = judge.claim_verdicts(qa, result.response)
        except JudgeUnavailable:
            continue
        recognized = sum(1 for v in verdicts if v.recognized)
        correct = sum(1 for v in verdicts if v.correct)
        assert correct <= recognized <= qa.num_claims
        crr_scores.append(recognized / qa.num_claims)
        if recognized > 0:
            car_scores.append(correct / recognized)
    if crr_scores:
        report.entries.append(_rate_entry("CRR", crr_scores))
    if car_scores:
        report.entries.append(_rate_entry("CAR", car_scores))

    cited = sum(1 for r, qa in joined if qa.source_arxiv_id in r.response.citations)
    report.entries.append(_frequency_entry("SCF", cited, len(joined)))

    flagged = 0
    hf_n = 0
    for result, qa in joined:
        try:
            if judge.hallucination(qa, result):
                flagged += 1
            hf_n += 1
        except JudgeUnavailable:
            continue
    if hf_n:
        report.entries.append(_frequency_entry("HF", flagged, hf_n))
    return report


def eval_ragas(
    results: Sequence[RunResult],
    dataset_items: Mapping[str, QAPair],
    judge: Judge,
    embed_cfg: EmbeddingConfig,
    paraphrase_count: int = ANSWER_RELEVANCE_PARAPHRASES,
    correctness_weight: float = ANSWER_CORRECTNESS_WEIGHT,
) -> MetricReport:
    """Judge-plus-embedding metrics reported as mean +/- distribution std.

    faithfulness: supported answer statements / total statements.
    context_relevancy: necessary context sentences / total sentences.
    context_entity_recall: ground-truth claims found in context / claims.
    answer_relevance: mean cosine between the question embedding and
        embeddings of judge-written paraphrase questions (clamped at 0).
    answer_correctness: w * fact-overlap F1 + (1-w) * cosine(answer,
        reference answer), w = 0.75."""
    if not results:
        raise ValueError("no results to evaluate")
    joined = _join(results, dataset_items)
    report = MetricReport(suite="ragas")

    faith: list[float] = []
    relevancy: list[float] = []
    cer: list[float] = []
    ans_rel: list[float] = []
    ans_corr: list[float] = []

    for result, qa in joined:
        try:
            total, supported = judge.statement_counts(result)
            if total > 0:
                faith.append(supported / total)
        except JudgeUnavailable:
            pass

        sentences = split_sentences(" ".join(t for t, _ in result.retrieved_contexts))
        if sentences:
            try:
                necessary = judge.necessary_sentences(qa, result, sentences)
                relevancy.append(necessary / len(sentences))
            except JudgeUnavailable:
                pass

        try:
            found = judge.claims_found(qa, result)
            cer.append(sum(found) / len(found))
        except JudgeUnavailable:
            pass

        try:
            questions = judge.paraphrases(result, paraphrase_count)
            vectors = embed_batch([qa.question, *questions], embed_cfg)
            sims = [
                max(0.0, similarity("cosine", vectors[0], v)) for v in vectors[1:]
            ]
            ans_rel.append(min(1.0, _mean(sims)))
        except JudgeUnavailable:
            pass

        try:
            tp, fp, fn = judge.fact_overlap(qa, result)
            f1 = (2 * tp / (2 * tp + fp + fn)) if (tp + fp + fn) else 0.0
            answer_vec, ref_vec = embed_batch(
                [result.response.markdown, qa.full_answer], embed_cfg
            )
            cos = max(0.0, min(1.0, similarity("cosine", answer_vec, ref_vec)))
            ans_corr.append(correctness_weight * f1 + (1 - correctness_weight) * cos)
        except JudgeUnavailable:
            pass

    for name, scores in (
        ("faithfulness", faith),
        ("context_relevancy", relevancy),
        ("context_entity_recall", cer),
        ("answer_relevance", ans_rel),
        ("answer_correctness", ans_corr),
    ):
        if scores:
            report.entries.append(_rate_entry(name, scores))
    return report


def aggregate_report(
    standard: MetricReport | None, ragas: MetricReport | None
) -> dict:
    """Machine-readable combined report; deterministic for fixed inputs."""
    out: dict = {"suites": {}}
    if standard is not None:
        out["suites"]["standard"] = standard.to_dict()
    if ragas is not None:
        out["suites"]["ragas"] = ragas.to_dict()
    return out


def render_report(report: dict) -> str:
    """Human-readable table, one row per metric: name, score +/- error, n."""
    lines = []
    for suite_name in ("standard", "ragas"):
        suite = report["suites"].get(suite_name)
        if not suite:
            continue
        lines.append(f"[{suite_name}]")
        width = max((len(m["name"]) for m in suite["metrics"]), default=0)
        for m in suite["metrics"]:
            lines.append(
                f"  {m['name']:<{width}}  "
                f"{m['score'] * 100:5.1f}% ± {m['error'] * 100:4.1f}%  "
                f"(n={m['n']}, {m['error_kind']})"
            )
    return "\n".join(lines) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def read_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
