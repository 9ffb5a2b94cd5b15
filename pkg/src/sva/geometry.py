"""Per-step geometric diagnostics of the projected columns g_i' on the plane X-perp.

Everything here is numeric at the target's working precision: the quantities
are measurements, nothing downstream branches on them.  Where cancellation
would be severe (``|b'|`` for the nearly X-aligned polar columns, the triangle
area) the integer part is combined with X exactly first and only the result is
rounded.

Orders: ``I``, ``II``, ``III`` index the columns by increasing ``|g'|``.
An *advancing* step is one where ``|g'_III|`` grows strictly.  ``in_T`` at s
means that step s+1 advances; ``in_Tstar`` adds the almost-flat conditions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath

from .engine import PAIRS, SvaState, Target
from .linalg3 import cross, norm2, sub

FLAT_RATIO = 0.1
FLAT_ANGLE = 30 * math.pi / 31
ANGLE_TOL = 1e-6

METRICS_HEADER = [
    "s", "order", "max_prime", "min_dbl_prime", "max_dbl_prime",
    "D_a", "D_b", "D_c", "A", "rho", "balance", "alpha",
    "angle01", "angle12", "angle02", "advanced", "in_T", "in_Tstar",
]


# ---------------------------------------------------------------------------
# plane geometry


def plane_basis(target: Target):
    """Orthonormal ``u, v`` spanning X-perp, from Gram-Schmidt on e0, e1."""
    ctx = target.backend.ctx
    X = target.X_mpf
    N = target.norm2_mpf

    def orth(w, against):
        for a, na in against:
            c = sum(wi * ai for wi, ai in zip(w, a)) / na
            w = [wi - c * ai for wi, ai in zip(w, a)]
        return w

    u = orth([ctx.mpf(1), ctx.mpf(0), ctx.mpf(0)], [(X, N)])
    nu = ctx.sqrt(sum(x * x for x in u))
    u = [x / nu for x in u]
    v = orth([ctx.mpf(0), ctx.mpf(1), ctx.mpf(0)], [(X, N), (u, ctx.mpf(1))])
    # second pass keeps the residuals at the rounding level
    v = orth(v, [(X, N), (u, ctx.mpf(1))])
    nv = ctx.sqrt(sum(x * x for x in v))
    v = [x / nv for x in v]
    return tuple(u), tuple(v)


def plane_coords(h, basis):
    u, v = basis
    return (h[0] * u[0] + h[1] * u[1] + h[2] * u[2], h[0] * v[0] + h[1] * v[1] + h[2] * v[2])


def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and turn(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and turn(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def symmetric_hull(points):
    """Counter-clockwise hull of ``{+p, -p}`` (a hexagon or a parallelogram)."""
    return _convex_hull([tuple(p) for p in points] + [(-p[0], -p[1]) for p in points])


def hexagon_inradius(points, sqrt=math.sqrt) -> float:
    """Radius of the largest disk centred at 0 inside ``CONV(+-p_i)``; 0 if degenerate."""
    hull = symmetric_hull(points)
    if len(hull) < 3:
        return 0 * sqrt(1)
    best = None
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        ex, ey = b[0] - a[0], b[1] - a[1]
        length = sqrt(ex * ex + ey * ey)
        if length == 0:
            continue
        d = abs(a[0] * ey - a[1] * ex) / length
        best = d if best is None or d < best else best
    return best if best is not None else 0 * sqrt(1)


def signed_angle(p, q, atan2=math.atan2):
    """Measure in (-pi, pi] of the angle from ``p`` to ``q``."""
    return atan2(p[0] * q[1] - p[1] * q[0], p[0] * q[0] + p[1] * q[1])


# ---------------------------------------------------------------------------
# per-step records


@dataclass
class MetricRecord:
    s: int
    order: tuple  # column indices (I, II, III)
    prime: tuple  # |g_i'| for i = 0, 1, 2
    coords: tuple  # g_i' in the plane basis
    max_prime: object
    min_dbl_prime: object
    max_dbl_prime: object
    D_a: object
    D_b: object
    D_c: object
    A: object
    rho: object
    balance: object
    alpha: object
    angles: dict  # (i, j) -> |angle(g_i', g_j')|
    advanced: Optional[bool]  # |g'_III| grew at this step (None at s = 0)
    in_T: Optional[bool] = None  # the next step advances (None while unknown)
    in_Tstar: Optional[bool] = None

    def flatness(self):
        """``(|g'_I| / |g'_II|, |angle(g'_III, g'_II)|)``."""
        i1, i2, i3 = self.order
        return self.prime[i1] / self.prime[i2], abs(_angle(self.coords[i3], self.coords[i2]))

    def csv_row(self, digits=12):
        def f(x):
            return _fmt(x, digits)

        return [
            self.s, "".join(map(str, self.order)), f(self.max_prime), f(self.min_dbl_prime),
            f(self.max_dbl_prime), f(self.D_a), f(self.D_b), f(self.D_c), f(self.A), f(self.rho),
            f(self.balance), f(self.alpha), f(self.angles[(0, 1)]), f(self.angles[(1, 2)]),
            f(self.angles[(0, 2)]), _flag(self.advanced), _flag(self.in_T), _flag(self.in_Tstar),
        ]


def _flag(b):
    return "" if b is None else str(int(b))


def _fmt(x, digits):
    if isinstance(x, float):
        return repr(x)
    return mpmath.nstr(x, digits)


def _angle(p, q):
    ctx = _ctx_of(p[0])
    return signed_angle(p, q, ctx.atan2 if ctx else math.atan2)


def _ctx_of(x):
    return getattr(x, "context", None)


def _exact_X(target: Target):
    """The target coordinates as exact field elements or rationals."""
    if target.backend.exact:
        return target.X
    out = []
    for x in target.X:
        man, exp = x.man_exp
        out.append(Fraction(int(man)) * Fraction(2) ** int(exp))
    return tuple(out)


class _Geometry:
    """Per-target constants shared by every record."""

    def __init__(self, target: Target):
        self.target = target
        self.ctx = target.backend.ctx
        self.basis = plane_basis(target)
        self.X_exact = _exact_X(target)
        X = self.X_exact
        self.N_exact = X[0] * X[0] + X[1] * X[1] + X[2] * X[2]
        self.sqrtN = self.ctx.sqrt(target.norm2_mpf)

    def to_mpf(self, v):
        if isinstance(v, (int, Fraction)):
            v = Fraction(v)
            return self.ctx.mpf(v.numerator) / v.denominator
        return self.target.backend.to_mpf(v)

    def exact_dot(self, h):
        X = self.X_exact
        return h[0] * X[0] + h[1] * X[1] + h[2] * X[2]

    def prime2_exact(self, h):
        """``|h'|^2`` without cancellation: ``(|h|^2 N - (h.X)^2) / N`` combined exactly."""
        d = self.exact_dot(h)
        return self.to_mpf(norm2(h) * self.N_exact - d * d) / self.target.norm2_mpf

    def area2(self, G):
        """Twice the area of the projected triangle: ``|((g1-g0) x (g2-g0)) . X| / |X|``."""
        g0, g1, g2 = G.cols
        n = cross(sub(g1, g0), sub(g2, g0))
        return abs(self.to_mpf(self.exact_dot(n))) / self.sqrtN


def metrics(state: SvaState, prev: Optional[SvaState], target: Target, geo: Optional[_Geometry] = None,
            prev_record: Optional[MetricRecord] = None) -> MetricRecord:
    geo = geo or _Geometry(target)
    ctx = geo.ctx
    G = state.G
    coords = tuple(plane_coords([ctx.mpf(x) for x in g], geo.basis) for g in G.cols)
    prime = tuple(ctx.sqrt(geo.prime2_exact(g)) for g in G.cols)
    order = tuple(sorted(range(3), key=lambda i: (prime[i], i)))
    dbl = tuple(abs(geo.to_mpf(c)) / geo.sqrtN for c in state.cof)
    max_prime = prime[order[2]]
    b_prime2 = [geo.prime2_exact(b) for b in state.B.cols]
    b_dbl = [abs(geo.to_mpf(geo.exact_dot(b))) / geo.sqrtN for b in state.B.cols]
    A = geo.area2(G)
    rho = hexagon_inradius(coords, sqrt=ctx.sqrt)
    angles = {p: abs(signed_angle(coords[p[0]], coords[p[1]], ctx.atan2)) for p in PAIRS}
    advanced = None
    if prev is not None:
        prev_max = prev_record.max_prime if prev_record is not None else max(
            ctx.sqrt(geo.prime2_exact(g)) for g in prev.G.cols
        )
        advanced = bool(max_prime > prev_max)
    return MetricRecord(
        s=state.s,
        order=order,
        prime=prime,
        coords=coords,
        max_prime=max_prime,
        min_dbl_prime=min(dbl),
        max_dbl_prime=max(dbl),
        D_a=max_prime**2 * min(dbl),
        D_b=max_prime**2 * max(dbl),
        D_c=max(b_prime2) * max(b_dbl),
        A=A,
        rho=rho,
        balance=max_prime / rho if rho > 0 else ctx.inf,
        alpha=A / max_prime**2,
        angles=angles,
        advanced=advanced,
    )


def mark_T(record: MetricRecord, advanced_next: bool) -> None:
    record.in_T = advanced_next
    if advanced_next:
        ratio, ang = record.flatness()
        record.in_Tstar = bool(ratio <= FLAT_RATIO and ang >= FLAT_ANGLE)
    else:
        record.in_Tstar = False


# ---------------------------------------------------------------------------
# stream aggregation


_PRODUCTS = ("D_a", "D_b", "D_c")


@dataclass
class MetricsCollector:
    """Run hook collecting one :class:`MetricRecord` per state."""

    target: Target
    keep: bool = True
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        self.geo = _Geometry(self.target)
        self._last = None
        self._last_state = None
        self.summary = {
            "steps": 0, "T": 0, "Tstar": 0,
            "overall": {k: {"sup": None, "inf": None} for k in _PRODUCTS},
            "on_T": {k: {"sup": None, "inf": None} for k in _PRODUCTS},
        }

    def __call__(self, state: SvaState, prev: Optional[SvaState] = None):
        rec = metrics(state, self._last_state, self.target, self.geo, self._last)
        if self._last is not None:
            mark_T(self._last, rec.advanced)
            self._account(self._last)
        self._last, self._last_state = rec, state
        if self.keep:
            self.records.append(rec)
        return None

    def _account(self, rec: MetricRecord):
        sm = self.summary
        sm["steps"] += 1
        groups = ["overall"] + (["on_T"] if rec.in_T else [])
        sm["T"] += bool(rec.in_T)
        sm["Tstar"] += bool(rec.in_Tstar)
        for g in groups:
            for k in _PRODUCTS:
                v = getattr(rec, k)
                slot = sm[g][k]
                slot["sup"] = v if slot["sup"] is None or v > slot["sup"] else slot["sup"]
                slot["inf"] = v if slot["inf"] is None or v < slot["inf"] else slot["inf"]

    def summary_json(self, digits=15) -> dict:
        sm = self.summary

        def conv(x):
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            if x is None or isinstance(x, int):
                return x
            return _fmt(x, digits)

        out = conv(sm)
        out["note"] = "the last state is not classified (T needs the following step)"
        return out


def write_metrics_csv(records, path, digits=12):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in records:
            w.writerow(r.csv_row(digits))


def write_summary_json(collector: MetricsCollector, path):
    with open(path, "w") as fh:
        json.dump(collector.summary_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# checks on a completed stream


def check_area_monotone(records, rel_tol) -> list:
    """Indices s where ``A^(s+1) < A^(s) (1 - rel_tol)``."""
    return [r.s for r, n in zip(records, records[1:]) if n.A < r.A * (1 - rel_tol)]


def check_geometry_on_T(records, rel_tol, angle_tol=ANGLE_TOL) -> list:
    """Violations of ``|g'_II| > |g'_III| / 2`` and pairwise angles ``> pi/3`` on T."""
    bad = []
    for r in records:
        if not r.in_T:
            continue
        i1, i2, i3 = r.order
        if not r.prime[i2] ** 2 > (r.prime[i3] ** 2 / 4) * (1 - rel_tol):
            bad.append((r.s, "norm"))
        for p, a in r.angles.items():
            if not a > math.pi / 3 - angle_tol:
                bad.append((r.s, f"angle{p[0]}{p[1]}"))
    return bad


def check_flat_triangle(records, rel_tol) -> list:
    """Violations of the almost-flat consequences on T*."""
    bad = []
    for r in records:
        if not r.in_Tstar:
            continue
        i1, i2, i3 = r.order
        g1, g2, g3 = r.coords[i1], r.coords[i2], r.coords[i3]
        n3 = r.prime[i3]
        s23 = _norm((g2[0] + g3[0], g2[1] + g3[1]))
        d = _norm((g1[0] - g2[0] - g3[0], g1[1] - g2[1] - g3[1]))
        slack = 1 + rel_tol
        if not r.prime[i2] / n3 * slack >= 0.979:
            bad.append((r.s, "ratio"))
        if not s23 <= 0.23 * n3 * slack:
            bad.append((r.s, "sum"))
        if not d <= 0.33 * n3 * slack:
            bad.append((r.s, "difference"))
    return bad


def _norm(p):
    ctx = _ctx_of(p[0])
    return (ctx.sqrt if ctx else math.sqrt)(p[0] * p[0] + p[1] * p[1])


def monotonic_subsequence_check(records) -> dict:
    """Windows where every T-step is a T*-step; is alpha nondecreasing along T inside each?

    Purely diagnostic: a decrease is reported, not raised.
    """
    windows, cur = [], []
    for r in records:
        if r.in_T is None:
            continue
        if r.in_T:
            if r.in_Tstar:
                cur.append(r)
            else:
                if cur:
                    windows.append(cur)
                cur = []
    if cur:
        windows.append(cur)
    report = []
    for w in windows:
        drops = [b.s for a, b in zip(w, w[1:]) if b.alpha < a.alpha]
        report.append({"start": w[0].s, "end": w[-1].s, "length": len(w), "decreases": drops})
    return {
        "windows": report,
        "consistent": all(not w["decreases"] for w in report),
    }
