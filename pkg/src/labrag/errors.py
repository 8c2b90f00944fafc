"""Exception hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


# --- corpus loading ---

class MalformedLine(EngineError):
    """A JSONL line is not valid JSON or not valid UTF-8."""


class MissingField(EngineError):
    """A record lacks a required field (or it is empty)."""


class DuplicateId(EngineError):
    """Two documents share the same id."""


class UnknownDocument(EngineError):
    """A QA pair references a document id absent from the corpus."""


# --- embedding ---

class EmbeddingFailure(EngineError):
    """The embedding provider failed or violated its contract."""


class ZeroVector(EngineError):
    """A zero-norm vector reached a similarity computation."""


# --- index ---

class UnknownChunk(EngineError):
    """A chunk id is not present in the index."""


class CorruptIndex(EngineError):
    """Persisted index files are inconsistent or damaged."""


class VersionMismatch(EngineError):
    """Persisted index was written by an incompatible version."""


class ProviderMismatch(EngineError):
    """Query-time embedding provider differs from the one used at build time."""


# --- generation ---

class TemplateError(EngineError):
    """Prompt template is missing a required placeholder."""


class GenerationFailure(EngineError):
    """The answer generator failed or returned empty output."""


# --- evaluation ---

class JudgeFailure(EngineError):
    """The metric judge failed or returned unusable output."""


class EmptyBenchmark(EngineError):
    """An experiment was started with zero QA pairs."""
