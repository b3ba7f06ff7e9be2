"""Exception types shared across the toolkit."""

from __future__ import annotations


class TGKError(Exception):
    """Base class for all toolkit errors."""


class GraphValidationError(TGKError):
    """A graph or walk violates a structural invariant."""


class ParseError(TGKError):
    """A graph/dataset file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(TGKError):
    """An enumeration exceeded its configured result cap."""


class CountOverflowError(TGKError):
    """A feature count or derived quantity exceeded the checked 64-bit range."""


class KernelMismatchError(TGKError):
    """Feature vectors from different kernels/parameters were combined."""


class NormalizationError(TGKError):
    """A Gram matrix cannot be normalized (zero self-similarity)."""


class NoWalkError(TGKError):
    """The graph admits no temporal walk of the requested length."""


class RetryBudgetError(TGKError):
    """The sampler's restart budget was exhausted although walks exist."""


class SolverError(TGKError):
    """The SVM solver failed to converge within its iteration cap."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class ManifestError(TGKError):
    """A pipeline manifest is inconsistent with the files on disk."""
