"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FracStableError(Exception):
    """Base class for package errors."""


class DomainError(FracStableError, ValueError):
    """An argument lies outside the domain of an operation."""


class SingularPointError(DomainError):
    """Evaluation hit the logarithmic singularity of an active log term."""


class SpecError(DomainError):
    """A kernel specification document is malformed.

    ``path`` locates the offending field, e.g. ``atoms[0].F1.params.slope``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DivergentIntegralError(FracStableError):
    """An integral that must be finite for a well-defined process diverges."""
