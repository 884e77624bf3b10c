"""The inference chain: decide whether to retrieve, retrieve context,
generate a cited draft, and rewrite it into valid GitHub-flavored markdown.

Step sequence in every trace: decide, retrieve (only when the decision says
so), generate, rewrite. With the scripted LLM backend and the deterministic
embedder the whole chain is a pure function of (question, retrieval config,
store contents).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from .embedding import EmbeddingConfig, embed_batch
from .errors import ChainFailure, EmptyCompletion, RagkitError
from .llm import LlmClient, LlmConfig, Message
from .markdown import extract_citations, repair_markdown, validate_markdown
from .templates import TemplateRegistry
from .tracing import Clock, TraceBuilder, TraceStore, deterministic_trace_id
from .vector_store import RetrievalConfig, ScoredHit, VectorStore

ANSWER_TEMPLATE = "answer_with_citations"
NO_CONTEXT_TEMPLATE = "answer_no_context"
DECIDE_TEMPLATE = "decide_retrieval"
REWRITE_TEMPLATE = "rewrite_markdown"


@dataclass(frozen=True)
class RetrievalDecision:
    needs_retrieval: bool
    rationale: str

    def __post_init__(self):
        if not self.needs_retrieval and not self.rationale:
            raise ValueError("a no-retrieval decision needs a rationale")


@dataclass(frozen=True)
class PromptBundle:
    system_instructions: str
    few_shot_examples: tuple[tuple[str, str], ...]
    context_blocks: tuple[tuple[str, str], ...]  # (chunk text, arxiv_id)
    user_question: str
    rendered_user: str

    def messages(self) -> list[Message]:
        msgs: list[Message] = [{"role": "system", "content": self.system_instructions}]
        for q, a in self.few_shot_examples:
            msgs.append({"role": "user", "content": q})
            msgs.append({"role": "assistant", "content": a})
        msgs.append({"role": "user", "content": self.rendered_user})
        return msgs


@dataclass(frozen=True)
class ChatResponse:
    markdown: str
    citations: tuple[str, ...]
    trace_id: str
    used_retrieval: bool

    def to_dict(self) -> dict:
        return {
            "markdown": self.markdown,
            "citations": list(self.citations),
            "trace_id": self.trace_id,
            "used_retrieval": self.used_retrieval,
        }


def decide_retrieval(
    question: str, client: LlmClient, cfg: LlmConfig, registry: TemplateRegistry
) -> RetrievalDecision:
    """Route the question. Any transport trouble falls back to retrieving:
    grounding is the safe default."""
    if not question:
        raise ValueError("question must be nonempty")
    template = registry.get(DECIDE_TEMPLATE)
    messages: list[Message] = [
        {"role": "system", "content": template.render("system")},
        {"role": "user", "content": template.render("user", question=question)},
    ]
    try:
        text = client.complete(messages, cfg).text.strip()
    except RagkitError as exc:
        return RetrievalDecision(
            needs_retrieval=True, rationale=f"decision step unavailable ({exc}); retrieving"
        )
    upper = text.upper()
    if upper.startswith("DIRECT"):
        rationale = text.partition(":")[2].strip() or "direct answer"
        return RetrievalDecision(needs_retrieval=False, rationale=rationale)
    if upper.startswith("RETRIEVE"):
        rationale = text.partition(":")[2].strip() or "knowledge base lookup required"
        return RetrievalDecision(needs_retrieval=True, rationale=rationale)
    return RetrievalDecision(
        needs_retrieval=True, rationale="unparseable decision output; retrieving"
    )


def build_prompt(
    question: str,
    hits: list[ScoredHit],
    template_id: str = ANSWER_TEMPLATE,
    registry: TemplateRegistry | None = None,
    no_context_template_id: str = NO_CONTEXT_TEMPLATE,
) -> PromptBundle:
    """Assemble the generation prompt: context blocks in hit order, each
    annotated with its arxiv id; zero hits switch to the no-context variant."""
    registry = registry or TemplateRegistry.default()
    if not hits:
        template = registry.get(no_context_template_id)
        return PromptBundle(
            system_instructions=template.render("system"),
            few_shot_examples=template.few_shot,
            context_blocks=(),
            user_question=question,
            rendered_user=template.render("user", question=question),
        )
    template = registry.get(template_id)
    blocks = tuple((h.record.chunk.text, h.record.chunk.meta.arxiv_id) for h in hits)
    context = "\n\n".join(
        template.render("context_block", text=text, arxiv_id=arxiv_id)
        for text, arxiv_id in blocks
    )
    return PromptBundle(
        system_instructions=template.render("system"),
        few_shot_examples=template.few_shot,
        context_blocks=blocks,
        user_question=question,
        rendered_user=template.render("user", context=context, question=question),
    )


def generate_answer(bundle: PromptBundle, client: LlmClient, cfg: LlmConfig) -> str:
    """One chat completion over the bundle; empty output is an error."""
    completion = client.complete(bundle.messages(), cfg)
    if not completion.text.strip():
        raise EmptyCompletion("generation produced empty text")
    return completion.text


def rewrite_markdown(
    draft: str,
    client: LlmClient,
    cfg: LlmConfig,
    registry: TemplateRegistry | None = None,
) -> tuple[str, bool]:
    """Rewrite the draft into markdown that passes validate_markdown.

    One LLM attempt plus one retry; if both fail (or transport fails) the
    deterministic local repair pass finishes the job. Returns (text,
    local_repair_applied)."""
    if not draft:
        raise ValueError("draft must be nonempty")
    registry = registry or TemplateRegistry.default()
    template = registry.get(REWRITE_TEMPLATE)
    messages: list[Message] = [
        {"role": "system", "content": template.render("system")},
        {"role": "user", "content": template.render("user", draft=draft)},
    ]
    for _ in range(2):
        try:
            candidate = client.complete(messages, cfg).text
        except RagkitError:
            break
        if candidate and validate_markdown(candidate).ok:
            return candidate, False
    return repair_markdown(draft), True


def run_chain(
    question: str,
    rcfg: RetrievalConfig,
    llm_cfg: LlmConfig,
    *,
    client: LlmClient,
    store: VectorStore,
    embed_cfg: EmbeddingConfig,
    registry: TemplateRegistry | None = None,
    trace_store: TraceStore | None = None,
    clock: Clock = time.time,
    full_capture: bool = False,
    context_sink: list[tuple[str, str]] | None = None,
) -> ChatResponse:
    """Execute decide -> (retrieve) -> generate -> rewrite, record one trace
    covering every executed step, and return the cited markdown response.

    The trace is persisted before the response is returned; a response
    without a durable trace is never produced."""
    registry = registry or TemplateRegistry.default()
    builder = TraceBuilder(
        question=question,
        retrieval_config=rcfg.snapshot(),
        llm_config=llm_cfg.snapshot(),
        clock=clock,
        full_capture=full_capture,
    )
    trace_id = deterministic_trace_id(
        question, rcfg.snapshot(), llm_cfg.snapshot(), store.fingerprint()
    )

    def run_step(name, input_payload, fn):
        try:
            return builder.step(name, input_payload, fn)
        except RagkitError as exc:
            if trace_store is not None:
                trace_store.record(builder.build(trace_id))
            raise ChainFailure(name, trace_id, exc) from exc

    def do_decide():
        d = decide_retrieval(question, client, llm_cfg, registry)
        payload = json.dumps({"needs_retrieval": d.needs_retrieval, "rationale": d.rationale})
        return d, payload

    decision = run_step("decide", question, do_decide)

    hits: list[ScoredHit] = []
    if decision.needs_retrieval:

        def do_retrieve():
            vector = embed_batch([question], embed_cfg)[0]
            found = store.search(vector, rcfg)
            payload = json.dumps(
                [
                    {
                        "chunk_id": h.record.chunk.chunk_id,
                        "arxiv_id": h.record.chunk.meta.arxiv_id,
                        "score": h.score,
                    }
                    for h in found
                ]
            )
            return found, payload

        hits = run_step("retrieve", question, do_retrieve)
        if not hits:
            builder.notes["retrieval"] = "no context available"

    def do_generate():
        bundle = build_prompt(question, hits, registry=registry)
        draft = generate_answer(bundle, client, llm_cfg)
        return draft, draft

    draft = run_step("generate", question, do_generate)

    def do_rewrite():
        final, repaired = rewrite_markdown(draft, client, llm_cfg, registry)
        if repaired:
            builder.notes["rewrite"] = "local repair applied"
        return final, final

    final_markdown = run_step("rewrite", draft, do_rewrite)

    retrieved_ids = {h.record.chunk.meta.arxiv_id for h in hits}
    citations = tuple(c for c in extract_citations(final_markdown) if c in retrieved_ids)
    if context_sink is not None:
        context_sink.extend(
            (h.record.chunk.text, h.record.chunk.meta.arxiv_id) for h in hits
        )

    if not decision.needs_retrieval:
        builder.notes["decide"] = f"answered directly: {decision.rationale}"

    response = ChatResponse(
        markdown=final_markdown,
        citations=citations,
        trace_id=trace_id,
        used_retrieval=decision.needs_retrieval,
    )
    if trace_store is not None:
        trace_store.record(builder.build(trace_id))
    return response
