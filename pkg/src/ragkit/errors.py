"""Exception and warning types shared across the package."""

from __future__ import annotations


class RagkitError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RagkitError):
    """Vector length differs from the configured/expected dimension."""


class ZeroVector(RagkitError):
    """Cosine similarity requested on a zero-norm vector."""


class NonFiniteVector(RagkitError):
    """Vector contains NaN or infinite entries."""


class CorruptFile(RagkitError):
    """Persistence file is empty, truncated, or not in the expected format."""


class VersionUnsupported(RagkitError):
    """Persistence file declares a format version newer than this build."""


class RemoteUnavailable(RagkitError):
    """Remote endpoint still failing after the configured retries."""


class AuthMissing(RagkitError):
    """The environment variable named by api_key_ref is unset."""


class EmptyCompletion(RagkitError):
    """LLM returned an empty completion where text was required."""


class UnknownTemplate(RagkitError):
    """Requested template id is not in the registry."""


class NoScriptedMatch(RagkitError):
    """Scripted LLM backend has no remaining rule matching the prompt."""


class ChainFailure(RagkitError):
    """A chain step failed; carries the step name and the trace id."""

    def __init__(self, step: str, trace_id: str, cause: Exception | None = None):
        self.step = step
        self.trace_id = trace_id
        self.cause = cause
        super().__init__(f"chain step {step!r} failed (trace {trace_id}): {cause}")


class GenerationExhausted(RagkitError):
    """QA generation ran out of retries; carries the valid items produced so far."""

    def __init__(self, message: str, items: list | None = None):
        self.items = items or []
        super().__init__(message)


class UnknownItem(RagkitError):
    """Referenced qa_id (or dataset id) does not exist."""


class InvalidTransition(RagkitError):
    """Review action not allowed from the item's current status without force."""


class ValidationFailed(RagkitError):
    """An edit or generated object violates the QA schema; carries violations."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations) or "validation failed")


class JoinFailure(RagkitError):
    """Run results reference qa_ids missing from the dataset; carries orphans."""

    def __init__(self, orphans: list[str]):
        self.orphans = orphans
        super().__init__(f"results reference unknown qa_ids: {', '.join(orphans)}")


class JudgeUnavailable(RagkitError):
    """Judge LLM failed for an item; the item is excluded from that metric's n."""


class MalformedLatex(UserWarning):
    """Unbalanced environment delimiters; carries the offending span.

    Emitted as a warning, never raised: the affected span falls back to
    character splitting so ingestion always completes.
    """

    def __init__(self, start: int, end: int, detail: str = ""):
        self.start = start
        self.end = end
        self.detail = detail
        super().__init__(f"unbalanced latex environment in span [{start}, {end}): {detail}")


class EmptyExport(UserWarning):
    """Dataset export selected zero items."""
