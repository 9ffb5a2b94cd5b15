"""Brute-force verifiers independent of the engine's decision logic.

``prism_check`` enumerates a box of integer points and tests the graded
best-approximation claims on those whose projection lies in the hexagon
``H' = CONV(+-g_i')``.  ``cf1d_run`` is the classical one-dimensional continued
fraction written in the same matrix formalism (B, G = polar of B, cofactors).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .engine import SvaState, Target
from .errors import UsageError, ValidationError
from .linalg3 import cross, prime_norm2_numeric, sub

# ---------------------------------------------------------------------------
# prism oracle


def _hull_edges(points, X, sign_of):
    """Counter-clockwise (relative to X) edges of ``CONV(+-p)`` for integer vectors p.

    Orientation tests are the exact triple products ``((b - a) x (c - a)) . X``.
    """
    pts = []
    for p in points:
        for q in (tuple(p), tuple(-x for x in p)):
            if q not in pts:
                pts.append(q)

    def turn(o, a, b):
        n = cross(sub(a, o), sub(b, o))
        return sign_of(n[0] * X[0] + n[1] * X[1] + n[2] * X[2])

    # an ordered pair (a, b) supports the hull iff no point is strictly to its right;
    # collinear sub-edges only repeat a supporting line, which is harmless here
    edges = []
    for a in pts:
        for b in pts:
            if a != b and all(turn(a, b, c) >= 0 for c in pts if c != a and c != b):
                edges.append((a, b))
    return edges


@dataclass
class PrismVerdict:
    s: int
    M: int
    tested: int = 0
    in_hull: int = 0
    skipped: int = 0
    violations: int = 0
    claims_checked: dict = field(default_factory=lambda: {"c1": 0, "c2": 0, "c3": 0, "c4": 0})
    counterexample: Optional[dict] = None
    hull_edges: int = 0
    exact: bool = True

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "M": self.M,
            "tested": self.tested,
            "in_hull": self.in_hull,
            "skipped": self.skipped,
            "violations": self.violations,
            "claims_checked": self.claims_checked,
            "hull_edges": self.hull_edges,
            "exact_membership": self.exact,
            "pass": self.passed,
            "counterexample": self.counterexample,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def prism_check(state: SvaState, target: Target, M: int) -> PrismVerdict:
    """Check the graded claims for all nonzero integer h in ``[-M, M]^3`` lying in the prism.

    1. ``|h''| >= |g0''|``;
    2. ``|h''| >= |g1''|`` unless h is in ``Z g0``;
    3. ``|h''| >= |g2''|`` unless h is in ``Z g0 + Z g1``;
    4. every free triplet of prism points has ``max |h_i''| >= |g2''|``.

    Exact targets decide hull membership exactly (the closed prism, boundary
    included).  BigReal targets use the margin ``2**-(prec/2) * diameter`` and
    skip points inside it.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    be = target.backend
    X = target.X
    G = state.G
    exact = be.exact
    verdict = PrismVerdict(state.s, M, exact=exact)

    def sign_exact(v):
        return be.sign(v)

    if exact:
        edges = _hull_edges(G.cols, X, sign_exact)
    else:
        Xf = target.X_mpf
        zero = be.ctx.mpf(0)

        def sign_num(v, tol=be.ctx.mpf(2) ** (-(be.precision // 2))):
            return 0 if abs(v) <= tol * target.norm2_mpf else (1 if v > zero else -1)

        edges = _hull_edges(G.cols, Xf, sign_num)
    verdict.hull_edges = len(edges)

    # d_e(h) = h . w_e - k_e with w_e = X x (b - a), k_e = a . w_e; inside iff all d_e >= 0
    lin = []
    for a, b in edges:
        c = sub(b, a)
        w = _cross_field(X, c)
        k = a[0] * w[0] + a[1] * w[1] + a[2] * w[2]
        wf = tuple(float(be.to_mpf(x)) for x in w)
        kf = float(be.to_mpf(k))
        wm = tuple(be.to_mpf(x) for x in w)
        km = be.to_mpf(k)
        lin.append((w, k, wf, kf, wm, km))

    ctx = be.ctx
    if not exact:
        diam = max(
            ctx.sqrt(_prime2(sub(p, q), target))
            for p in [c for c in G.cols] + [tuple(-x for x in c) for c in G.cols]
            for q in [c for c in G.cols] + [tuple(-x for x in c) for c in G.cols]
        )
        delta = ctx.mpf(2) ** (-(be.precision // 2)) * diam

    cof = state.cof
    Bt = state.B  # n = tB h gives the coordinates of h in the G basis
    members = []
    for h0 in range(-M, M + 1):
        for h1 in range(-M, M + 1):
            for h2 in range(-M, M + 1):
                if h0 == h1 == h2 == 0:
                    continue
                h = (h0, h1, h2)
                verdict.tested += 1
                status = _membership(h, lin, be, exact, None if exact else delta)
                if status is None:
                    verdict.skipped += 1
                    continue
                if not status:
                    continue
                verdict.in_hull += 1
                members.append(h)

    Xd = tuple(float(x) for x in target.X_mpf)
    cof_d = tuple(float(be.to_mpf(c)) for c in cof)
    for h in members:
        # cheap double screen first; only near ties go to the exact comparison
        hxd = abs(h[0] * Xd[0] + h[1] * Xd[1] + h[2] * Xd[2])
        margin = 1e-12 * (abs(h[0]) + abs(h[1]) + abs(h[2])) * Xd[2]
        hx = None
        n = Bt.apply_transpose(h)
        if G.apply(n) != h:
            raise AssertionError("lattice coordinates do not reconstruct h")
        graded = [(0, True), (1, n[1] != 0 or n[2] != 0), (2, n[2] != 0)]
        for i, applies in graded:
            if not applies:
                continue
            verdict.claims_checked[f"c{i + 1}"] += 1
            if hxd > cof_d[i] + margin:
                continue
            if hx is None:
                hx = h[0] * X[0] + h[1] * X[1] + h[2] * X[2]
            if _abs_less(hx, cof[i], be):
                verdict.violations += 1
                if verdict.counterexample is None:
                    verdict.counterexample = {"h": list(h), "claim": i + 1, "n": list(n)}
    # claim 4: the cheapest free triplet, built greedily by increasing |h''|
    Xm = target.X_mpf
    keyed = sorted(members, key=lambda h: abs(h[0] * Xm[0] + h[1] * Xm[1] + h[2] * Xm[2]))
    basis = []
    for h in keyed:
        if _rank(basis + [h]) > len(basis):
            basis.append(h)
            if len(basis) == 3:
                break
    if len(basis) == 3:
        verdict.claims_checked["c4"] += 1
        worst = basis[-1]
        wx = worst[0] * X[0] + worst[1] * X[1] + worst[2] * X[2]
        if _abs_less(wx, cof[2], be):
            verdict.violations += 1
            if verdict.counterexample is None:
                verdict.counterexample = {"triplet": [list(b) for b in basis], "claim": 4}
    return verdict


def _cross_field(X, c):
    return (
        X[1] * c[2] - X[2] * c[1],
        X[2] * c[0] - X[0] * c[2],
        X[0] * c[1] - X[1] * c[0],
    )


def _prime2(h, target):
    return prime_norm2_numeric(h, target)


def _membership(h, lin, be, exact, delta):
    """True inside, False outside, None if within the BigReal margin."""
    undecided = []
    for e in lin:
        w, k, wf, kf, wm, km = e
        v = h[0] * wf[0] + h[1] * wf[1] + h[2] * wf[2] - kf
        scale = (abs(h[0]) + abs(h[1]) + abs(h[2])) * max(map(abs, wf)) + abs(kf)
        if v < -1e-9 * scale:
            return False
        if v <= 1e-9 * scale:
            undecided.append(e)
    ambiguous = False
    for w, k, wf, kf, wm, km in undecided:
        if exact:
            s = be.sign(h[0] * w[0] + h[1] * w[1] + h[2] * w[2] - k)
            if s < 0:
                return False
        else:
            v = h[0] * wm[0] + h[1] * wm[1] + h[2] * wm[2] - km
            norm_w = be.ctx.sqrt(wm[0] ** 2 + wm[1] ** 2 + wm[2] ** 2)
            dist = v / norm_w
            if dist < -delta:
                return False
            if dist <= delta:
                ambiguous = True
    return None if ambiguous else True


def _abs_less(hx, c, be) -> bool:
    """``|hx| < c`` for c > 0 (exactly, or with a rounding margin in BigReal)."""
    if be.exact:
        return be.sign(c - hx) > 0 and be.sign(c + hx) > 0
    tol = abs(c) * be.ctx.mpf(2) ** (-(be.precision // 2))
    return abs(hx) < c - tol


def _rank(vectors) -> int:
    rows = [[Fraction(x) for x in v] for v in vectors]
    r = 0
    for col in range(3):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
    return r


# ---------------------------------------------------------------------------
# quadratic surds


class QuadraticSurd:
    """``a + b sqrt(d)`` with rational a, b and a non-square integer d > 1."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d=2):
        d = int(d)
        if d <= 1 or math.isqrt(d) ** 2 == d:
            raise ValidationError("d must be a non-square integer > 1")
        self.a, self.b, self.d = Fraction(a), Fraction(b), d

    def _lift(self, o):
        if isinstance(o, QuadraticSurd):
            if o.d != self.d:
                raise UsageError("surds with different radicands")
            return o.a, o.b
        if isinstance(o, (int, Fraction)):
            return Fraction(o), Fraction(0)
        return None

    def __add__(self, o):
        p = self._lift(o)
        return NotImplemented if p is None else QuadraticSurd(self.a + p[0], self.b + p[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.a, -self.b, self.d)

    def __sub__(self, o):
        p = self._lift(o)
        return NotImplemented if p is None else QuadraticSurd(self.a - p[0], self.b - p[1], self.d)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        p = self._lift(o)
        if p is None:
            return NotImplemented
        a, b = self.a, self.b
        return QuadraticSurd(a * p[0] + b * p[1] * self.d, a * p[1] + b * p[0], self.d)

    __rmul__ = __mul__

    def conjugate(self):
        return QuadraticSurd(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def __truediv__(self, o):
        if isinstance(o, (int, Fraction)):
            return QuadraticSurd(self.a / o, self.b / o, self.d)
        p = self._lift(o)
        if p is None:
            return NotImplemented
        o = QuadraticSurd(p[0], p[1], self.d)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        return self * o.conjugate() / n

    def __rtruediv__(self, o):
        return QuadraticSurd(o, 0, self.d) / self

    def __eq__(self, o):
        p = self._lift(o)
        return NotImplemented if p is None else (self.a, self.b) == p

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __floor__(self) -> int:
        # (P + Q sqrt d) / L with integers; floor((n + t) / L) = floor((n + floor t) / L)
        L = math.lcm(self.a.denominator, self.b.denominator)
        P, Q = int(self.a * L), int(self.b * L)
        r = math.isqrt(Q * Q * self.d)  # floor(|Q| sqrt d); never exact
        t = r if Q >= 0 else -r - 1
        return (P + t) // L

    def sign(self) -> int:
        if self.b == 0:
            return (self.a > 0) - (self.a < 0)
        f = math.floor(self)
        return 1 if f >= 0 else -1

    def __lt__(self, o):
        return (self - o).sign() < 0

    def __gt__(self, o):
        return (self - o).sign() > 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __repr__(self):
        return f"QuadraticSurd({self.a}, {self.b}, {self.d})"


# ---------------------------------------------------------------------------
# one-dimensional continued fraction


@dataclass(frozen=True)
class CF1DState:
    n: int
    B: tuple  # ((p_{n-1}, p_n), (q_{n-1}, q_n))
    a: Optional[int]  # partial quotient leading to n+1 (None once terminated)
    xi: object  # x_n / x_{n-1}
    cof: tuple  # (x_n, x_{n-1}) = (g0.X, g1.X)

    @property
    def convergent(self) -> tuple:
        return self.B[0][1], self.B[1][1]

    @property
    def G(self):
        return _polar2(self.B)


@dataclass
class CF1DResult:
    x: object
    states: list
    terminated: bool

    @property
    def quotients(self) -> list:
        return [st.a for st in self.states if st.a is not None]


def _polar2(B):
    (p0, p1), (q0, q1) = B
    det = p0 * q1 - p1 * q0
    # (tB)^-1 = (1/det) [[q1, -q0], [-p1, p0]]
    return ((q1 * det, -q0 * det), (-p1 * det, p0 * det))


def _matmul2(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def _floor(v):
    ctx = getattr(v, "context", None)
    return int(ctx.floor(v)) if ctx is not None else int(math.floor(v))


def cf1d_run(x, n_steps: int, tol=None) -> CF1DResult:
    """Classical continued fraction of ``0 < x < 1`` with ``X = (x, 1)``.

    ``x`` may be a Fraction, a :class:`QuadraticSurd` or an mpf.  Each state is
    checked for ``det B = +-1`` and ``x_n b0 + x_{n-1} b1 = X`` (exactly unless x
    is an mpf, then within ``tol``).
    """
    if isinstance(x, int):
        x = Fraction(x)
    if not (0 < x < 1):
        raise ValidationError("0 < x < 1 is required")
    exact = isinstance(x, (Fraction, QuadraticSurd))
    if not exact and tol is None:
        tol = x.context.mpf(2) ** (-(x.context.prec // 2))
    B = ((1, 0), (0, 1))
    prev, cur = 1 + 0 * x, x  # x_0 = 1, x_1 = x
    states = []
    terminated = False
    for n in range(1, n_steps + 1):
        _check_cf_state(B, cur, prev, x, exact, tol)
        zero = cur == 0 if exact else cur <= tol
        if zero:
            states.append(CF1DState(n, B, None, cur / prev, (cur, prev)))
            terminated = True
            break
        a = _floor(prev / cur)
        states.append(CF1DState(n, B, a, cur / prev, (cur, prev)))
        B = _matmul2(B, ((0, 1), (1, a)))
        prev, cur = cur, prev - a * cur
    return CF1DResult(x, states, terminated)


def _check_cf_state(B, x_n, x_prev, x, exact, tol):
    (p0, p1), (q0, q1) = B
    if p0 * q1 - p1 * q0 not in (1, -1):
        raise AssertionError("det B_n != +-1")
    # x_n b_{0,n} + x_{n-1} b_{1,n} = (x, 1)
    r0 = x_n * p0 + x_prev * p1 - x
    r1 = x_n * q0 + x_prev * q1 - 1
    if exact:
        if r0 != 0 or r1 != 0:
            raise AssertionError("cofactor relation fails")
    elif abs(r0) > tol or abs(r1) > tol:
        raise AssertionError("cofactor relation fails beyond tolerance")


def dirichlet_ok(x, state: CF1DState) -> bool:
    """``|x - p_n / q_n| < 1 / q_n^2`` (exactly for Fractions and surds)."""
    p, q = state.convergent
    if q == 0:
        return True
    ctx = getattr(x, "context", None)
    if ctx is not None:
        return abs(x - ctx.mpf(p) / q) < ctx.mpf(1) / (q * q)
    err = x - Fraction(p, q)
    bound = Fraction(1, q * q)
    if isinstance(err, QuadraticSurd):
        return (err - bound).sign() < 0 and (err + bound).sign() > 0
    return -bound < err < bound
