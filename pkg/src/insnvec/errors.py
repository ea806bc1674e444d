"""Exception types raised by the library.

Everything derives from InsnvecError so callers (and the CLI) can treat
any domain failure as a data error, distinct from usage errors.
"""

from __future__ import annotations


class InsnvecError(Exception):
    """Base class for all library errors."""


# --- instruction parsing / normalization ---

class EmptyInstruction(InsnvecError):
    """Raised when an instruction text is empty or whitespace-only."""


class UnbalancedBrackets(InsnvecError):
    """Raised when brackets or quotes inside an instruction do not pair up."""


# --- corpus handling ---

class RecordError(InsnvecError):
    """Base for per-record corpus errors; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRecord(RecordError):
    """A corpus or labeled-pair record violates the expected schema."""


class ArchMismatch(RecordError):
    """Both sides of a block pair report the same architecture."""


class EmptyBlock(RecordError):
    """A block in a corpus record contains no instructions."""


class EmptyVocabulary(InsnvecError):
    """No token survived the minimum-count cutoff."""


class UnknownArchitecture(InsnvecError):
    """An architecture tag has no entries in the vocabulary."""


# --- model ---

class EmptyContext(InsnvecError):
    """A training step was built with an empty context window."""


class ConfigMismatch(InsnvecError):
    """Model, vocabulary, and training configuration disagree."""


class IncompatibleVersion(InsnvecError):
    """A model file was written by an unsupported format version."""


class CorruptFile(InsnvecError):
    """A model file is truncated or structurally invalid."""


# --- evaluation ---

class ZeroVector(InsnvecError):
    """Cosine similarity is undefined for a zero-norm vector."""


class DimensionMismatch(InsnvecError):
    """Two vectors being compared have different dimensions."""


class UnknownToken(InsnvecError):
    """A queried token is not present in the model vocabulary."""


class EmptySide(InsnvecError):
    """ROC computation received no positive or no negative scores."""


class AllTokensUnknown(InsnvecError):
    """Every token of a block is missing from the vocabulary."""
