"""The Smallest Vector Algorithm: state, single step, runs and dependence detection.

At each step the three columns of ``G`` are projected on the plane orthogonal to
X; the pair of columns whose projections are closest is found, the column with
the larger cofactor is replaced by its difference with the other one, and the
columns are re-sorted by cofactor ``g_i . X``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import Callable, Iterable, Optional

from . import linalg3
from .errors import DomainError, InvariantViolation, PrecisionExhausted, ValidationError
from .linalg3 import UnimodularMatrix3, compare_prime_norms, polar
from .scalars import (
    DEFAULT_PRECISION,
    BigRealBackend,
    CubicBackend,
    CubicFieldElement,
    MinimalPolynomial,
    RationalBackend,
    render_ratio,
    truncate_decimal,
)

# tie-break order for equal candidate distances
PAIRS = ((0, 1), (1, 2), (0, 2))
DEFAULT_DIGITS = 25


class Target:
    """The triple X = (x0, x1, x2) with 0 < x0 < x1 < x2, bound to a scalar backend."""

    def __init__(self, backend, values):
        if len(values) != 3:
            raise ValidationError("a target has exactly three coordinates")
        self.backend = backend
        self.X = tuple(backend.coerce(v) for v in values)
        self._validate()
        X = self.X
        self.norm2 = X[0] * X[0] + X[1] * X[1] + X[2] * X[2]
        self.norm2_mpf = backend.to_mpf(self.norm2)
        self.X_mpf = tuple(backend.to_mpf(x) for x in X)

    @property
    def kind(self) -> str:
        return self.backend.kind

    @property
    def poly(self) -> Optional[MinimalPolynomial]:
        return getattr(self.backend, "poly", None)

    @property
    def R(self):
        """Rational matrix with X = R (1, r, r^2)^T (cubic targets only)."""
        if self.kind != "cubic":
            return None
        return [list(x.coeffs) for x in self.X]

    def _validate(self):
        be = self.backend
        x0, x1, x2 = self.X
        errs = []
        if be.exact:
            if be.sign(x0) <= 0:
                errs.append("x0 must be positive")
            if be.sign(x1 - x0) <= 0:
                errs.append("x0 < x1 is required")
            if be.sign(x2 - x1) <= 0:
                errs.append("x1 < x2 is required")
        else:
            if not (0 < x0 < x1 < x2):
                errs.append("0 < x0 < x1 < x2 is required")
        if errs:
            raise ValidationError("invalid target: " + "; ".join(errs))

    # -- constructors ------------------------------------------------------
    @classmethod
    def cubic(cls, poly: MinimalPolynomial, elements, precision=DEFAULT_PRECISION) -> "Target":
        backend = CubicBackend(poly, precision)
        return cls(backend, elements)

    @classmethod
    def rational(cls, values, precision=DEFAULT_PRECISION) -> "Target":
        return cls(RationalBackend(precision), [Fraction(v) for v in values])

    @classmethod
    def bigreal(cls, values, precision=DEFAULT_PRECISION) -> "Target":
        return cls(BigRealBackend(precision), values)

    def dot(self, h):
        X = self.X
        return h[0] * X[0] + h[1] * X[1] + h[2] * X[2]

    def __repr__(self):
        return f"Target({self.kind}, {[str(x) for x in self.X]})"


@dataclass(frozen=True)
class SvaState:
    """``G`` (columns g0, g1, g2), its polar ``B`` and the cofactors ``g_i . X``.

    ``pair`` is the subtraction pair (i, j) that produced this state, ``None`` at s = 0.
    """

    s: int
    G: UnimodularMatrix3
    B: UnimodularMatrix3
    cof: tuple
    pair: Optional[tuple] = None

    def projective(self, target):
        """``x^(s) = (cof0/cof2, cof1/cof2)``."""
        be = target.backend
        return be.ratio(self.cof[0], self.cof[2]), be.ratio(self.cof[1], self.cof[2])

    def ratio10(self, target):
        """``(cof1/cof0, cof2/cof0)``."""
        be = target.backend
        return be.ratio(self.cof[1], self.cof[0]), be.ratio(self.cof[2], self.cof[0])


def init(target: Target) -> SvaState:
    I = UnimodularMatrix3.identity()
    return SvaState(0, I, I, tuple(target.X), None)


def choose_pair(state: SvaState, target: Target) -> tuple:
    """Pair (i, j), i < j, minimising ``|g_j' - g_i'|``; ties keep the earlier pair of PAIRS."""
    g = state.G.cols
    best = PAIRS[0]
    best_vec = linalg3.sub(g[1], g[0])
    for i, j in PAIRS[1:]:
        d = linalg3.sub(g[j], g[i])
        if compare_prime_norms(d, best_vec, target) < 0:
            best, best_vec = (i, j), d
    return best


def step(state: SvaState, target: Target, check_recurrence: bool = True) -> SvaState:
    be = target.backend
    if be.exact and be.is_zero(state.cof[0]):
        raise DomainError("zero cofactor: the target is rationally dependent")
    i, j = choose_pair(state, target)
    cols = list(state.G.cols)
    cof = list(state.cof)
    cols[j] = linalg3.sub(cols[j], cols[i])
    recurrence = cof[j] - cof[i]
    if be.exact:
        cof[j] = recurrence
    else:
        # recomputed from scratch; the subtractive recurrence is only a cross-check
        cof[j] = target.dot(cols[j])
        if check_recurrence:
            _cross_check(recurrence, cof[j], target, state.s + 1)
    order = _stable_cofactor_order(cof, cols, target)
    G = UnimodularMatrix3(tuple(cols[k] for k in order))
    return SvaState(state.s + 1, G, polar(G), tuple(cof[k] for k in order), (i, j))


def _cross_check(recurrence, recomputed, target, s):
    be = target.backend
    ctx = be.ctx
    tol = ctx.mpf(2) ** (-(be.precision // 4))
    dep = dependence_epsilon(target) * abs(target.X[2])
    if abs(recurrence) < dep and abs(recomputed) < dep:
        return
    scale_ = max(abs(recurrence), abs(recomputed))
    if abs(recurrence - recomputed) > tol * scale_:
        raise PrecisionExhausted(
            f"step {s}: recomputed cofactor disagrees with the recurrence beyond 2^-{be.precision // 4}",
            step=s,
        )


def _stable_cofactor_order(cof, cols, target):
    be = target.backend

    def cmp(a, b):
        diff = cof[a] - cof[b]
        if be.exact:
            return be.sign(diff)
        err = be.dot_error(cols[a], target.X) + be.dot_error(cols[b], target.X)
        if abs(diff) <= err:
            return 0
        return 1 if diff > 0 else -1

    return sorted(range(3), key=cmp_to_key(cmp))


# ---------------------------------------------------------------------------
# dependence


@dataclass(frozen=True)
class DependenceCertificate:
    """Integer vector ``g0`` with ``g0 . X = 0`` (exactly, unless ``verified`` is False)."""

    s: int
    vector: tuple
    verified: bool
    residual: str

    def to_json(self):
        return {
            "s": self.s,
            "vector": list(self.vector),
            "verified": self.verified,
            "note": "exact" if self.verified else "numerical - unverified",
            "residual": self.residual,
        }


def dependence_epsilon(target: Target):
    be = target.backend
    return be.ctx.mpf(2) ** (-(be.precision // 2))


def detect_dependence(state: SvaState, target: Target, eps=None) -> Optional[DependenceCertificate]:
    be = target.backend
    c0 = state.cof[0]
    g0 = state.G.cols[0]
    if be.exact:
        if be.is_zero(c0):
            return DependenceCertificate(state.s, g0, True, "0")
        return None
    if eps is None:
        eps = dependence_epsilon(target)
    if abs(c0) < eps * abs(target.X[2]):
        # a relation of the stored X leaves |g0 . X| at the rounding level; a cofactor
        # that is small yet clearly above it only means the precision is used up
        floor = be.dot_error(g0, target.X) * 2 ** max(8, be.precision // 8)
        if abs(c0) > floor:
            raise PrecisionExhausted(
                f"cof0 = {be.ctx.nstr(c0, 5)} fell below the dependence epsilon but stays "
                f"above the rounding level {be.ctx.nstr(floor, 5)}",
                step=state.s,
            )
        return DependenceCertificate(state.s, g0, False, be.ctx.nstr(c0, 10))
    return None


# ---------------------------------------------------------------------------
# invariants


def check_state(state: SvaState, target: Target) -> None:
    """Raise :class:`InvariantViolation` unless the basic properties hold."""
    be = target.backend
    if state.G.det not in (1, -1):
        raise InvariantViolation(f"s={state.s}: det(G) = {state.G.det}")
    unit = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    if tuple(state.G.apply_transpose(b) for b in state.B.cols) != unit:
        raise InvariantViolation(f"s={state.s}: B is not the polar of G")
    c = state.cof
    recon = state.B.apply(c)
    if be.exact:
        if be.sign(c[0]) < 0 or be.sign(c[1] - c[0]) < 0 or be.sign(c[2] - c[1]) < 0:
            raise InvariantViolation(f"s={state.s}: cofactors out of order")
        if tuple(recon) != tuple(target.X):
            raise InvariantViolation(f"s={state.s}: sum cof_i b_i != X")
        if tuple(state.G.apply_transpose(target.X)) != tuple(c):
            raise InvariantViolation(f"s={state.s}: tG X != cofactors")
    else:
        tol = be.ctx.mpf(2) ** (-(be.precision // 2))
        errs = [be.dot_error(g, target.X) for g in state.G.cols]
        for k in range(2):
            if c[k] - c[k + 1] > errs[k] + errs[k + 1]:
                raise InvariantViolation(f"s={state.s}: cofactors out of order")
        for r, x in zip(recon, target.X):
            if abs(r - x) > tol * abs(x):
                raise InvariantViolation(f"s={state.s}: sum cof_i b_i != X beyond tolerance")


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunResult:
    target: Target
    states: list
    stop_reason: str
    dependence: Optional[DependenceCertificate] = None
    error: Optional[Exception] = None
    hook_results: dict = field(default_factory=dict)

    @property
    def last(self) -> SvaState:
        return self.states[-1]

    def trace(self, digits=DEFAULT_DIGITS, mode="truncate"):
        return [trace_record(st, self.target, digits, mode) for st in self.states]


Hook = Callable[[SvaState, Optional[SvaState]], Optional[str]]


def run(
    target: Target,
    max_steps: int,
    hooks: Iterable[Hook] = (),
    check: bool = False,
    dependence_eps=None,
) -> RunResult:
    """Iterate :func:`step` up to ``max_steps`` times.

    Each hook is called as ``hook(state, previous_state)`` for every state
    (``previous_state`` is ``None`` at s = 0); a hook returning a string stops
    the run with that string as the stop reason.  The run also stops on
    dependence or precision exhaustion; the exception is kept in ``error``.
    """
    if max_steps < 1:
        raise ValidationError("max_steps must be >= 1")
    hooks = list(hooks)
    state = init(target)
    states = [state]
    result = RunResult(target, states, "max_steps")

    def visit(st, prev):
        if check:
            check_state(st, target)
        for hook in hooks:
            reason = hook(st, prev)
            if reason:
                return reason
        cert = detect_dependence(st, target, dependence_eps)
        if cert is not None:
            result.dependence = cert
            return "dependence"
        return None

    try:
        reason = visit(state, None)
        while reason is None and state.s < max_steps:
            try:
                nxt = step(state, target)
            except PrecisionExhausted as exc:
                exc.step = state.s + 1
                raise
            states.append(nxt)
            reason = visit(nxt, state)
            state = nxt
    except PrecisionExhausted as exc:
        result.error = exc
        reason = "precision"
    if reason:
        result.stop_reason = reason
    return result


# ---------------------------------------------------------------------------
# trace records


@dataclass(frozen=True)
class TraceRecord:
    s: int
    pair: Optional[tuple]
    cof: tuple
    ratio10: tuple
    ratio02: tuple
    prime2: tuple
    G: tuple
    B: tuple

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "pair": list(self.pair) if self.pair else None,
            "cof": list(self.cof),
            "ratio10": list(self.ratio10),
            "ratio02": list(self.ratio02),
            "G": list(self.G),
            "B": list(self.B),
        }

    def csv_row(self) -> list:
        pair = "" if self.pair is None else f"{self.pair[0]}-{self.pair[1]}"
        return [self.s, pair, *self.cof, *self.ratio10, *self.ratio02, *self.prime2, *self.G, *self.B]


CSV_HEADER = (
    ["s", "pair", "cof0", "cof1", "cof2", "ratio10_1", "ratio10_2", "ratio02_0", "ratio02_1"]
    + ["prime2_0", "prime2_1", "prime2_2"]
    + [f"G{k}" for k in range(9)]
    + [f"B{k}" for k in range(9)]
)


def trace_record(state: SvaState, target: Target, digits=DEFAULT_DIGITS, mode="truncate") -> TraceRecord:
    be = target.backend
    c0, c1, c2 = state.cof

    def show(v):
        return truncate_decimal(v, digits, mode)

    def ratio(a, b):
        if be.is_zero(b):
            return None
        return render_ratio(a, b, digits, mode)

    prime2 = tuple(
        truncate_decimal(linalg3.prime_norm2_numeric(g, target), min(digits, be.ctx.dps), "round")
        for g in state.G.cols
    )
    return TraceRecord(
        s=state.s,
        pair=state.pair,
        cof=(show(c0), show(c1), show(c2)),
        ratio10=(ratio(c1, c0), ratio(c2, c0)),
        ratio02=(ratio(c0, c2), ratio(c1, c2)),
        prime2=prime2,
        G=tuple(state.G.flat()),
        B=tuple(state.B.flat()),
    )


def write_trace_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")) + "\n")


def write_trace_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.csv_row())
