"""Chat-completion backends.

``remote`` speaks the standard chat-completions HTTP contract (model +
message list + temperature, bearer token from the environment). ``scripted``
replays canned completions from an ordered rule list, so chains, dataset
generation, and judging are all testable offline and deterministically.
"""

from __future__ import annotations

import json
import os
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .errors import AuthMissing, NoScriptedMatch, RemoteUnavailable

Message = dict[str, str]  # {"role": ..., "content": ...}


@dataclass(frozen=True)
class LlmConfig:
    backend: str = "scripted"  # "remote" | "scripted"
    model_name: str = "gpt-3.5-turbo-1106"
    endpoint_base_url: str = "https://api.openai.com/v1"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    api_key_ref: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    scripted_fixture: str | None = None  # rule file for backend="scripted"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.backend not in ("remote", "scripted"):
            raise ValueError(f"unknown llm backend {self.backend!r}")

    def snapshot(self) -> dict:
        # Config never holds key material, only the env var name.
        return {
            "backend": self.backend,
            "model_name": self.model_name,
            "endpoint_base_url": self.endpoint_base_url,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "api_key_ref": self.api_key_ref,
        }


@dataclass
class Completion:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass
class ScriptedRule:
    """Fires when `match` is a substring of the last user message.

    `completion` may be a callable (prompt -> text) for echo-style tests;
    file fixtures carry plain strings. `uses` bounds how often the rule can
    fire (None = unlimited), which lets tests script failure-then-success
    sequences.
    """

    match: str
    completion: str | Callable[[str], str]
    uses: int | None = None
    fired: int = 0

    def available(self) -> bool:
        return self.uses is None or self.fired < self.uses


class ScriptedLlm:
    def __init__(self, rules: Sequence[ScriptedRule]):
        self.rules = list(rules)
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedLlm":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            [
                ScriptedRule(
                    match=r["match"], completion=r["completion"], uses=r.get("uses")
                )
                for r in raw
            ]
        )

    def complete(self, messages: Sequence[Message], cfg: LlmConfig) -> Completion:
        prompt = next(
            (m["content"] for m in reversed(messages) if m["role"] == "user"), ""
        )
        self.calls.append(prompt)
        for rule in self.rules:
            if rule.match in prompt and rule.available():
                rule.fired += 1
                if callable(rule.completion):
                    text = rule.completion(prompt)
                elif rule.completion == "<<ECHO>>":
                    # file fixtures cannot carry callables; this directive
                    # replays the user message (identity rewrite etc.)
                    text = prompt
                else:
                    text = rule.completion
                return Completion(text=text)
        raise NoScriptedMatch(f"no scripted rule matches prompt: {prompt[:120]!r}")


class RemoteLlm:
    def __init__(self, transport: httpx.BaseTransport | None = None):
        self._transport = transport
        self._rng = random.Random()

    def complete(self, messages: Sequence[Message], cfg: LlmConfig) -> Completion:
        api_key = os.environ.get(cfg.api_key_ref, "")
        if not api_key:
            raise AuthMissing(f"environment variable {cfg.api_key_ref} is not set")
        url = cfg.endpoint_base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": cfg.model_name,
            "messages": list(messages),
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(min(2.0, 0.2 * 2 ** (attempt - 1)) + self._rng.uniform(0, 0.05))
            try:
                with httpx.Client(transport=self._transport, timeout=cfg.timeout) as client:
                    resp = client.post(url, json=payload, headers=headers)
                if resp.status_code == 200:
                    body = resp.json()
                    usage = body.get("usage", {})
                    return Completion(
                        text=body["choices"][0]["message"]["content"] or "",
                        prompt_tokens=int(usage.get("prompt_tokens", 0)),
                        completion_tokens=int(usage.get("completion_tokens", 0)),
                    )
                last_error = RemoteUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
                if 400 <= resp.status_code < 500 and resp.status_code != 429:
                    break
            except httpx.HTTPError as exc:
                last_error = exc
        raise RemoteUnavailable(f"chat endpoint failed after retries: {last_error}")


LlmClient = ScriptedLlm | RemoteLlm


def make_client(
    cfg: LlmConfig,
    transport: httpx.BaseTransport | None = None,
    scripted_rules: Sequence[ScriptedRule] | None = None,
) -> LlmClient:
    """Build the client for a config. Scripted rules may come from code
    (`scripted_rules`) or from the fixture file named by the config."""
    if cfg.backend == "scripted":
        if scripted_rules is not None:
            return ScriptedLlm(scripted_rules)
        if cfg.scripted_fixture:
            return ScriptedLlm.from_file(cfg.scripted_fixture)
        raise ValueError("scripted backend needs scripted_rules or a scripted_fixture path")
    return RemoteLlm(transport=transport)


def parse_json_object(text: str) -> dict:
    """Extract the first JSON object from a completion, tolerating markdown
    fences around it. Raises ValueError when there is none."""
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = [ln for ln in stripped.split("\n") if not ln.startswith("```")]
        stripped = "\n".join(lines).strip()
    start = stripped.find("{")
    if start == -1:
        raise ValueError("completion contains no JSON object")
    decoder = json.JSONDecoder()
    obj, _ = decoder.raw_decode(stripped[start:])
    if not isinstance(obj, dict):
        raise ValueError("completion JSON is not an object")
    return obj
