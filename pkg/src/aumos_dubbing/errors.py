"""Exception hierarchy for the dubbing toolkit.

All errors carry a human-readable message plus keyword context, so callers can
log them as structured events: ``logger.error("prepare_failed", **exc.context)``.
The CLI maps every ``DubbingError`` to the data-error exit code.
"""

from __future__ import annotations

from typing import Any


class DubbingError(Exception):
    """Base class for all toolkit errors.

    Args:
        message: Human-readable description.
        **context: Structured fields describing the failing input.
    """

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context: dict[str, Any] = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value!r}" for key, value in sorted(self.context.items()))
        return f"{self.message} ({details})"


class StructuralInputError(DubbingError):
    """Input violates a structural invariant (ordering, overlap, schema)."""


class InsufficientDataError(DubbingError):
    """Not enough samples or segments to perform the operation."""


class VocabularyError(DubbingError):
    """A token, phoneme or bin index falls outside a closed vocabulary."""


class ConfigurationError(DubbingError):
    """Configuration is invalid or inconsistent with the data."""


class CheckpointMismatchError(DubbingError):
    """Checkpoint hashes do not match the vocabularies or bin boundaries in use."""


class TrainingDivergedError(DubbingError):
    """Training produced a non-finite loss."""


class AudioFormatError(DubbingError):
    """Audio is not 16-bit mono PCM at a supported sample rate."""


class MetricInputError(DubbingError):
    """Metric inputs are empty, mismatched or out of domain."""
