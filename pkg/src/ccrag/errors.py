"""Exception hierarchy shared across the toolkit.

Errors that abort an operation are exceptions; recoverable per-file or
per-example problems are counted in stats and never raised past the
operation that observed them.
"""


class CcragError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFileType(CcragError):
    """A top-level extraction was attempted on a header or unknown file."""


class ParseFailure(CcragError):
    """Unrecoverable syntax error; partial results may accompany it."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []


class UnresolvedInclude(CcragError):
    """An in-repo include could not be resolved to a file."""


class CorpusFormatError(CcragError):
    """A corpus record is malformed; carries the offending line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class EmptyIndex(CcragError):
    """A search was issued against an index with no documents."""


class EmptyInput(CcragError):
    """Embedding was requested for text with no tokens."""


class DimensionMismatch(CcragError):
    """Two vectors of different dimensionality were compared."""


class ZeroVector(CcragError):
    """Cosine similarity against a zero-norm vector."""


class FingerprintMismatch(CcragError):
    """Query-time embedder does not match the one that built the store."""


class EmbeddingServiceError(CcragError):
    """Remote embedding endpoint failed after retries."""

    def __init__(self, message, status=None, body_excerpt=None):
        super().__init__(message)
        self.status = status
        self.body_excerpt = body_excerpt


class TemplateMismatch(CcragError):
    """Prompt template id does not match the requested knowledge kind."""


class LlmUnavailable(CcragError):
    """Chat endpoint unreachable; callers fall back where a fallback exists."""


class LlmHttpError(CcragError):
    """Chat endpoint returned a non-retryable error or retries exhausted."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class UnknownTechnique(CcragError):
    """Retrieval technique name not recognized."""


class ExampleSetMismatch(CcragError):
    """Overlap analysis over runs with differing example ids or k."""


class SchemaError(CcragError):
    """Benchmark record violates the schema; carries the line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class DuplicateId(CcragError):
    """Benchmark contains two examples with the same id."""


class CoverageGap(CcragError):
    """Aggregate report requested over scores missing some example ids."""


class ConfigError(CcragError):
    """Invalid configuration (missing index, bad endpoint, bad params)."""
