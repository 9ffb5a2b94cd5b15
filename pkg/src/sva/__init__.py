"""Smallest Vector Algorithm: a two-dimensional continued fraction with exact cubic arithmetic."""

from .engine import Target, SvaState, init, run, step, trace_record
from .errors import (
    DomainError,
    InvariantViolation,
    LoopError,
    PrecisionExhausted,
    SvaError,
    UsageError,
    ValidationError,
)
from .scalars import CubicFieldElement, MinimalPolynomial

__version__ = "0.1.0"

__all__ = [
    "CubicFieldElement",
    "DomainError",
    "InvariantViolation",
    "LoopError",
    "MinimalPolynomial",
    "PrecisionExhausted",
    "SvaError",
    "SvaState",
    "Target",
    "UsageError",
    "ValidationError",
    "init",
    "run",
    "step",
    "trace_record",
]
