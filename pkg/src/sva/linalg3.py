"""Exact integer 3-vectors and unimodular 3x3 matrices, plus projections onto X-perp.

Matrices are stored by columns, matching the column vectors g0, g1, g2 of the
algorithm.  Projection quantities are expressed through inner products with X
so that exact comparisons never need a square root::

    h . X                      (signed cofactor-like quantity)
    |h'|^2 = |h|^2 - (h.X)^2 / |X|^2
    |h''|  = |h.X| / |X|       (kept as the pair |h.X|, |X|^2)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError

Vec3 = tuple  # three Python ints


def vec(*xs) -> Vec3:
    if len(xs) == 1:
        xs = tuple(xs[0])
    if len(xs) != 3:
        raise ValidationError("expected three coordinates")
    return tuple(int(x) for x in xs)


def add(u, v):
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


def sub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def scale(k, u):
    return (k * u[0], k * u[1], k * u[2])


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def cross(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def norm2(u):
    return dot(u, u)


def det_columns(c0, c1, c2):
    return dot(c0, cross(c1, c2))


@dataclass(frozen=True)
class UnimodularMatrix3:
    """Integer 3x3 matrix with determinant +-1, stored as three columns."""

    cols: tuple
    det: int = 0

    def __post_init__(self):
        cols = tuple(vec(c) for c in self.cols)
        if len(cols) != 3:
            raise ValidationError("expected three columns")
        d = det_columns(*cols)
        if d not in (1, -1):
            raise ValidationError(f"matrix is not unimodular (det = {d})")
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "det", d)

    @classmethod
    def identity(cls) -> "UnimodularMatrix3":
        return cls(((1, 0, 0), (0, 1, 0), (0, 0, 1)))

    @classmethod
    def from_rows(cls, rows) -> "UnimodularMatrix3":
        rows = [vec(r) for r in rows]
        return cls(tuple(tuple(rows[i][j] for i in range(3)) for j in range(3)))

    def __getitem__(self, i):
        return self.cols[i]

    def entry(self, i, j) -> int:
        """Row ``i``, column ``j``."""
        return self.cols[j][i]

    @property
    def rows(self):
        return tuple(tuple(self.cols[j][i] for j in range(3)) for i in range(3))

    def flat(self):
        """Nine integers, column after column."""
        return [x for c in self.cols for x in c]

    def polar(self) -> "UnimodularMatrix3":
        return polar(self)

    def transpose(self) -> "UnimodularMatrix3":
        return UnimodularMatrix3(self.rows)

    def apply(self, v):
        """Matrix-vector product ``M v``; ``v`` may hold any ring elements."""
        c0, c1, c2 = self.cols
        return tuple(c0[i] * v[0] + c1[i] * v[1] + c2[i] * v[2] for i in range(3))

    def apply_transpose(self, v):
        """``tM v``, i.e. the three inner products ``col_i . v``."""
        return tuple(c[0] * v[0] + c[1] * v[1] + c[2] * v[2] for c in self.cols)

    def __matmul__(self, other: "UnimodularMatrix3") -> "UnimodularMatrix3":
        return UnimodularMatrix3(tuple(self.apply(c) for c in other.cols))


def polar(M: UnimodularMatrix3) -> UnimodularMatrix3:
    """``(tM)^-1``: column i is ``det * (col_j x col_k)`` for (i, j, k) circular."""
    if not isinstance(M, UnimodularMatrix3):
        M = UnimodularMatrix3(M)
    c0, c1, c2 = M.cols
    e = M.det
    return UnimodularMatrix3(
        (scale(e, cross(c1, c2)), scale(e, cross(c2, c0)), scale(e, cross(c0, c1)))
    )


def integer_matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]):
    """Row-major product of plain integer matrices (no unimodularity required)."""
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


# ---------------------------------------------------------------------------
# projections relative to a target X


@dataclass(frozen=True)
class ProjectionSplit:
    """Projection data of an integer vector h relative to X.

    ``dbl_prime`` is the pair ``(|h.X|, |X|^2)``; ``|h''| = |h.X| / sqrt(|X|^2)``.
    """

    dot: object
    norm_x2: object
    prime_norm2: object
    dbl_prime: tuple


def target_dot(h, target):
    X = target.X
    return h[0] * X[0] + h[1] * X[1] + h[2] * X[2]


def projection_split(h, target) -> ProjectionSplit:
    h = vec(h)
    d = target_dot(h, target)
    N = target.norm2
    prime = norm2(h) - d * d / N
    absd = d if target.backend.sign(d) >= 0 else -d
    return ProjectionSplit(d, N, prime, (absd, N))


def compare_prime_norms(h1, h2, target) -> int:
    """Sign of ``|h1'| - |h2'|`` (-1, 0 or 1).

    Exact backends compare ``(|h1|^2 - |h2|^2)|X|^2 - ((h1.X)^2 - (h2.X)^2)``.
    The BigReal backend evaluates the same difference divided by ``|X|^2`` with
    a running error bound and raises :class:`PrecisionExhausted` when the
    result is inside it.
    """
    if tuple(h1) == tuple(h2):
        return 0
    be = target.backend
    d1, d2 = target_dot(h1, target), target_dot(h2, target)
    dint = norm2(h1) - norm2(h2)
    if be.exact:
        return be.sign(dint * target.norm2 - (d1 - d2) * (d1 + d2))
    N = target.norm2
    frac = (d1 - d2) * (d1 + d2) / N
    diff = dint - frac
    e1, e2 = be.dot_error(h1, target.X), be.dot_error(h2, target.X)
    err = (2 * (abs(d1) * e1 + abs(d2) * e2) + (d1 * d1 + d2 * d2) * 8 * be.ulp) / N
    err += abs(diff) * 2 * be.ulp
    return be.sign(diff, err)


def prime_norm2_numeric(h, target):
    """``|h'|^2`` as an mpf at the target's working precision."""
    ctx = target.backend.ctx
    d = target.backend.to_mpf(target_dot(h, target))
    return ctx.mpf(norm2(h)) - d * d / target.norm2_mpf
