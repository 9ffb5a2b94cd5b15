"""Lagrange loops: X^(s+p) = lambda X^(s), the unit lambda, and ratio recovery.

A loop is found by keying every state on its projective cofactor vector
``(cof0/cof2, cof1/cof2)``.  From a loop (s, p) the integer matrix
``Bt = (B^(s+p))^-1 B^(s) = tG^(s+p) B^(s)`` satisfies ``Bt X^(s) = lambda X^(s)``,
so ``lambda`` is a root of ``F(xi) = det(Bt - xi I)``.  Since ``det Bt = +-1``,
``lambda`` is a unit; it is cubic once F is shown to have no rational root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .engine import DEFAULT_DIGITS, SvaState, Target
from .errors import LoopError, UsageError, ValidationError
from .linalg3 import integer_matmul
from .scalars import CubicFieldElement, MinimalPolynomial, truncate_decimal

DEFAULT_MATCH_DIGITS = 40


class LoopScanner:
    """Run hook remembering every projective key; records collisions.

    In exact modes keys are the exact field (or rational) pair.  In BigReal
    mode a key is a decimal fingerprint with ``match_digits`` digits;
    fingerprint hits are confirmed by comparing the ratios within ``match_eps``
    (relative) and are reported as candidates only.
    """

    def __init__(self, target: Target, stop_on_first=False, match_digits=DEFAULT_MATCH_DIGITS, match_eps=None):
        self.target = target
        self.stop_on_first = stop_on_first
        be = target.backend
        self.match_digits = match_digits if be.exact else min(match_digits, int(be.precision * 0.30103) // 2)
        if not be.exact:
            ctx = be.ctx
            self.match_eps = ctx.mpf(match_eps) if match_eps is not None else ctx.mpf(2) ** (-(be.precision // 2))
        else:
            self.match_eps = None
        self.seen = {}
        self.values = {}
        self.collisions = []

    def key(self, state: SvaState):
        x0, x1 = state.projective(self.target)
        if self.target.backend.exact:
            return (x0, x1)
        return (truncate_decimal(x0, self.match_digits, "round"), truncate_decimal(x1, self.match_digits, "round"))

    def __call__(self, state: SvaState, prev=None):
        k = self.key(state)
        if k in self.seen:
            s0 = self.seen[k]
            if self.target.backend.exact or self._confirm(s0, state):
                self.collisions.append((s0, state.s - s0))
                if self.stop_on_first:
                    return "loop"
            return None
        self.seen[k] = state.s
        if not self.target.backend.exact:
            self.values[state.s] = state.projective(self.target)
        return None

    def _confirm(self, s0, state):
        a0, a1 = self.values[s0]
        b0, b1 = state.projective(self.target)
        eps = self.match_eps
        return abs(a0 - b0) <= eps * abs(a0) and abs(a1 - b1) <= eps * abs(a1)

    @property
    def first(self) -> Optional[tuple]:
        return self.collisions[0] if self.collisions else None

    def occurrences(self, state: SvaState, states):
        """All indices t with the same projective key as ``state``."""
        k = self.key(state)
        return [st.s for st in states if self.key(st) == k]


def loop_scan(states, target: Target, **kwargs) -> Optional[tuple]:
    """First ``(s, p)`` with ``x^(s+p) = x^(s)`` among ``states``, else ``None``."""
    scanner = LoopScanner(target, stop_on_first=True, **kwargs)
    for st in states:
        if scanner(st):
            break
    return scanner.first


# ---------------------------------------------------------------------------
# loop certificates


def charpoly(M) -> list:
    """Coefficients ``[f0, f1, f2, f3]`` (lowest first) of ``det(M - xi I)``."""
    m = M
    tr = m[0][0] + m[1][1] + m[2][2]
    minors = (
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
        + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2] - m[1][2] * m[2][1]
    )
    det = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    return [det, -minors, tr, -1]


def poly_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass
class LoopResult:
    s: int
    p: int
    Btilde: list  # row-major integers
    F: list  # det(Bt - xi I), lowest degree first
    lam: object  # exact element (cubic) or mpf (bigreal)
    lam_poly: MinimalPolynomial  # monic form of -F, with the root index of lambda
    unit: bool
    certified: bool
    B_s: object = None
    ratios: Optional[dict] = None
    notes: list = field(default_factory=list)

    def to_json(self, digits=DEFAULT_DIGITS) -> dict:
        out = {
            "s": self.s,
            "p": self.p,
            "Btilde": self.Btilde,
            "F": self.F,
            "monic_minpoly": {"a": str(self.lam_poly.a), "b": str(self.lam_poly.b), "c": str(self.lam_poly.c),
                              "root": self.lam_poly.root},
            "lambda": {
                "decimal": truncate_decimal(self.lam, digits),
                "field": [str(c) for c in self.lam.coeffs] if isinstance(self.lam, CubicFieldElement) else None,
            },
            "unit": self.unit,
            "certified": self.certified,
            "notes": self.notes,
        }
        if self.ratios is not None:
            out["ratios"] = {
                name: {"num": [str(c) for c in num], "den": [str(c) for c in den]}
                for name, (num, den) in self.ratios.items()
            }
        return out

    def dumps(self, digits=DEFAULT_DIGITS) -> str:
        return json.dumps(self.to_json(digits), indent=2)


def btilde(state_s: SvaState, state_t: SvaState) -> list:
    """``(B^(t))^-1 B^(s) = tG^(t) B^(s)`` as a row-major integer matrix."""
    tGt = [list(col) for col in state_t.G.cols]  # rows of tG are the columns of G
    Bs = [list(r) for r in state_s.B.rows]
    return integer_matmul(tGt, Bs)


def extract_lambda(s: int, p: int, states, target: Target) -> LoopResult:
    if p <= 0:
        raise UsageError("a loop needs p > 0")
    by_s = {st.s: st for st in states}
    try:
        st_s, st_t = by_s[s], by_s[s + p]
    except KeyError as exc:
        raise UsageError(f"states for s={s} and s+p={s + p} are required") from exc
    be = target.backend
    Bt = btilde(st_s, st_t)
    F = charpoly(Bt)
    notes = []
    unit = abs(F[0]) == 1
    if not unit:
        raise LoopError(f"det(Btilde) = {F[0]}: not unimodular")
    # rational roots of a monic integer cubic with constant +-1 can only be +-1
    for cand in (1, -1):
        if poly_eval(F, cand) == 0:
            raise LoopError(f"F has the rational root {cand}: false or degenerate loop")
    lam = be.ratio(st_t.cof[2], st_s.cof[2])
    if be.exact:
        if lam == 1 or lam == -1:
            raise LoopError("lambda = +-1: degenerate loop")
        if poly_eval(F, lam) != 0:
            raise LoopError("F(lambda) != 0: the collision is not a loop")
        for a, b in zip(st_t.cof, st_s.cof):
            if a != lam * b:
                raise LoopError("X^(s+p) != lambda X^(s)")
        certified = True
    else:
        lam_f = lam
        resid = abs(poly_eval(F, lam_f))
        if resid > be.ctx.mpf(2) ** (-(be.precision // 4)):
            raise LoopError("F(lambda) is not small: false collision")
        certified = False
        notes.append("bigreal candidate: lambda only checked numerically")
    a, b, c = Fraction(F[2]), Fraction(F[1]), Fraction(F[0])  # -F = xi^3 - a xi^2 - b xi - c
    try:
        probe = MinimalPolynomial(a, b, c, 0)
    except ValidationError as exc:
        raise LoopError(f"F is reducible: {exc}") from exc
    root = _root_index(probe, lam, be)
    lam_poly = MinimalPolynomial(a, b, c, root)
    return LoopResult(s, p, Bt, F, lam, lam_poly, unit, certified, B_s=st_s.B, notes=notes)


def _root_index(P: MinimalPolynomial, value, backend) -> int:
    approx = backend.to_mpf(value)
    intervals = [MinimalPolynomial(P.a, P.b, P.c, k).root_interval(backend.ctx.prec // 2)
                 for k in range(P.n_real_roots)]
    lo_f = [backend.ctx.mpf(iv.lo.numerator) / iv.lo.denominator for iv in intervals]
    hi_f = [backend.ctx.mpf(iv.hi.numerator) / iv.hi.denominator for iv in intervals]
    dist = [0 if lo <= approx <= hi else min(abs(approx - lo), abs(approx - hi)) for lo, hi in zip(lo_f, hi_f)]
    return min(range(len(dist)), key=dist.__getitem__)


def field_rank(elements) -> int:
    """Rank over Q of the coefficient vectors of cubic field elements."""
    rows = [list(e.coeffs) for e in elements]
    return _rank(rows)


def _rank(rows):
    m = [[Fraction(x) for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def verify_loop(loop: LoopResult, target: Target) -> dict:
    """Check every certificate property; returns name -> bool."""
    checks = {
        "unit_constant_term": abs(loop.F[0]) == 1,
        "monic": abs(loop.F[3]) == 1,
        "no_rational_root": all(poly_eval(loop.F, c) != 0 for c in (1, -1)),
        "lambda_not_pm1": True,
    }
    lam = loop.lam
    if isinstance(lam, CubicFieldElement):
        checks["lambda_not_pm1"] = lam != 1 and lam != -1
        checks["F_lambda_zero"] = poly_eval(loop.F, lam) == 0
        checks["rank_1_lambda_lambda2"] = field_rank([lam**0, lam, lam * lam]) == 3
    return checks


# ---------------------------------------------------------------------------
# ratio recovery


def recover_ratios(loop: LoopResult, B_s=None) -> dict:
    """x0/x2 and x1/x2 as ``(num, den)`` coefficient lists of polynomials in lambda.

    Works in ``K = Q[xi]/F``: with ``A`` = ``Bt - xi I`` minus its third row,
    ``A'`` its first two columns and ``a2`` the third one, ``Z = (-(A')^-1 a2, 1)``
    and ``x_i / x2 = (row_i(B^(s)) Z) / (row_2(B^(s)) Z)``.
    """
    B_s = B_s if B_s is not None else loop.B_s
    K = MinimalPolynomial(loop.lam_poly.a, loop.lam_poly.b, loop.lam_poly.c, loop.lam_poly.root)
    xi = K.generator()
    Bt = loop.Btilde
    A = [[Bt[i][j] - (xi if i == j else 0) for j in range(3)] for i in range(2)]
    A = [[x if isinstance(x, CubicFieldElement) else K.element(x) for x in row] for row in A]
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    if det.is_zero():
        raise LoopError("det(A') = 0: F is not the minimal polynomial of lambda")
    inv_det = det.inverse()
    a2 = (A[0][2], A[1][2])
    y0 = -(A[1][1] * a2[0] - A[0][1] * a2[1]) * inv_det
    y1 = -(-A[1][0] * a2[0] + A[0][0] * a2[1]) * inv_det
    Z = (y0, y1, K.element(1))
    rows = B_s.rows
    comb = [rows[i][0] * Z[0] + rows[i][1] * Z[1] + rows[i][2] * Z[2] for i in range(3)]
    ratios = {
        "x0/x2": (list(comb[0].coeffs), list(comb[2].coeffs)),
        "x1/x2": (list(comb[1].coeffs), list(comb[2].coeffs)),
    }
    loop.ratios = ratios
    return ratios


def evaluate_ratio(num, den, lam):
    """Evaluate ``num(lam) / den(lam)`` for coefficient lists (lowest first)."""
    return poly_eval(num, lam) / poly_eval(den, lam)


def round_trip(loop: LoopResult, target: Target) -> dict:
    """Compare recovered ratios with the target's x0/x2 and x1/x2 (exact in cubic mode)."""
    ratios = loop.ratios if loop.ratios is not None else recover_ratios(loop)
    X = target.X
    out = {}
    for name, (num, den), expected in (
        ("x0/x2", ratios["x0/x2"], target.backend.ratio(X[0], X[2])),
        ("x1/x2", ratios["x1/x2"], target.backend.ratio(X[1], X[2])),
    ):
        got = evaluate_ratio(num, den, loop.lam)
        if target.backend.exact:
            out[name] = got == expected
        else:
            eps = target.backend.ctx.mpf(2) ** (-(target.backend.precision // 4))
            out[name] = abs(got - expected) <= eps * abs(expected)
    return out
