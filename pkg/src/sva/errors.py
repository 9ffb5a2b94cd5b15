"""Exception types shared across the package."""


class SvaError(Exception):
    """Base class for all package errors."""


class ValidationError(SvaError, ValueError):
    """Input data violates a documented precondition (ordering, irreducibility...)."""


class UsageError(SvaError, ValueError):
    """API misuse, e.g. mixing elements of different fields."""


class DomainError(SvaError, ArithmeticError):
    """Mathematically undefined operation, e.g. inverting zero."""


class PrecisionExhausted(SvaError, ArithmeticError):
    """A BigReal decision could not be made at the working precision."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InvariantViolation(SvaError, AssertionError):
    """An internal invariant failed; indicates a bug or corrupted state."""


class LoopError(SvaError):
    """A detected loop failed certification (false collision or degenerate loop)."""
