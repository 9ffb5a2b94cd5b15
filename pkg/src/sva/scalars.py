"""Numeric substrates: exact arithmetic in a cubic field, and BigReal floats.

Every other module talks to scalars through one of three backends:

* :class:`CubicBackend` -- values are :class:`CubicFieldElement`, signs are exact;
* :class:`RationalBackend` -- values are :class:`fractions.Fraction`;
* :class:`BigRealBackend` -- values are mpmath floats at a fixed working precision,
  and every sign decision carries an explicit error bound.

Exact signs in ``Q[r]`` are decided by evaluating the element on a dyadic
isolating interval of the selected root and bisecting until the interval
excludes zero.  Since the minimal polynomial is irreducible, the only element
vanishing at the root is the zero triple.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from mpmath.ctx_mp import MPContext

from .errors import DomainError, PrecisionExhausted, UsageError, ValidationError

DEFAULT_PRECISION = 256

# ---------------------------------------------------------------------------
# dense univariate polynomials over Q, lowest degree first


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(num, den):
    num = [Fraction(x) for x in _trim(num)]
    den = [Fraction(x) for x in _trim(den)]
    if not den:
        raise DomainError("polynomial division by zero")
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    while len(num) >= len(den) and num:
        k = len(num) - len(den)
        f = num[-1] / den[-1]
        q[k] = f
        for i, d in enumerate(den):
            num[i + k] -= f * d
        num = _trim(num)
    return _trim(q), num


def _poly_sub(p, q):
    n = max(len(p), len(q))
    p = list(p) + [0] * (n - len(p))
    q = list(q) + [0] * (n - len(q))
    return _trim([a - b for a, b in zip(p, q)])


def _poly_mul(p, q):
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def poly_ext_gcd(f, g):
    """Return ``(d, u, v)`` with ``u*f + v*g = d`` and ``d`` monic."""
    r0, r1 = _trim(f), _trim(g)
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        t0, t1 = t1, _poly_sub(t0, _poly_mul(q, t1))
    if not r0:
        return [], s0, t0
    lead = Fraction(r0[-1])
    return ([x / lead for x in r0], [x / lead for x in s0], [x / lead for x in t0])


def _poly_eval(p, x):
    acc = 0
    for coef in reversed(p):
        acc = acc * x + coef
    return acc


def _poly_deriv(p):
    return _trim([i * p[i] for i in range(1, len(p))])


def _sturm_sequence(p):
    seq = [_trim([Fraction(x) for x in p]), _poly_deriv([Fraction(x) for x in p])]
    while seq[-1] and len(seq[-1]) > 1:
        _, r = _poly_divmod(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-x for x in r])
    return seq


def _sign_variations(seq, x):
    signs = []
    for p in seq:
        v = _poly_eval(p, x)
        if v != 0:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _divisors(n):
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise UsageError(f"expected an exact rational, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# root isolation


def _sign_at_dyadic(ipoly, m, k):
    """Sign of the integer cubic ``ipoly`` (highest degree first) at ``m / 2**k``."""
    a3, a2, a1, a0 = ipoly
    s = 1 << k
    v = ((a3 * m + a2 * s) * m + a1 * s * s) * m + a0 * s * s * s
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class RootInterval:
    """Isolating interval ``[num/2**shift, (num+1)/2**shift]`` of one real root.

    ``lo_sign`` is the sign of the polynomial at the lower end; it never changes
    under refinement since the root stays strictly inside.
    """

    ipoly: tuple
    num: int
    shift: int
    lo_sign: int
    method: str = "bisection"

    @property
    def lo(self) -> Fraction:
        return Fraction(self.num, 1 << self.shift)

    @property
    def hi(self) -> Fraction:
        return Fraction(self.num + 1, 1 << self.shift)

    @property
    def width(self) -> Fraction:
        return Fraction(1, 1 << self.shift)

    def refine(self, steps=1) -> "RootInterval":
        num, k = self.num, self.shift
        for _ in range(steps):
            mid = 2 * num + 1
            k += 1
            s = _sign_at_dyadic(self.ipoly, mid, k)
            if s == 0:
                raise ValidationError("hit an exact dyadic root; polynomial is reducible")
            num = mid if s == self.lo_sign else 2 * num
        return RootInterval(self.ipoly, num, k, self.lo_sign, self.method)


def _isolate_real_roots(ipoly):
    """Isolating dyadic intervals (as Fraction pairs) for all real roots, ascending."""
    a3, a2, a1, a0 = ipoly
    coeffs_low = [Fraction(a0), Fraction(a1), Fraction(a2), Fraction(a3)]
    bound = 1 + max(abs(Fraction(a2, a3)), abs(Fraction(a1, a3)), abs(Fraction(a0, a3)))
    B = 1 << max(0, math.ceil(bound)).bit_length()
    seq = _sturm_sequence(coeffs_low)

    out = []
    stack = [(Fraction(-B), Fraction(B))]
    while stack:
        lo, hi = stack.pop()
        count = _sign_variations(seq, lo) - _sign_variations(seq, hi)
        if count == 0:
            continue
        if count == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        if _poly_eval(coeffs_low, mid) == 0:
            raise ValidationError(f"polynomial has the rational root {mid}")
        stack.append((lo, mid))
        stack.append((mid, hi))
    out.sort()
    return out


def _dyadic_interval(ipoly, lo: Fraction, hi: Fraction) -> RootInterval:
    coeffs_low = [ipoly[3], ipoly[2], ipoly[1], ipoly[0]]
    # widths produced by bisecting [-2^m, 2^m] are powers of two
    while hi - lo > 1:
        mid = (lo + hi) / 2
        vlo, vmid = _poly_eval(coeffs_low, lo), _poly_eval(coeffs_low, mid)
        if vmid == 0:
            raise ValidationError(f"polynomial has the rational root {mid}")
        if (vlo > 0) == (vmid > 0):
            lo = mid
        else:
            hi = mid
    shift = (hi - lo).denominator.bit_length() - 1
    num = lo * (1 << shift)
    assert num.denominator == 1
    vlo = _poly_eval(coeffs_low, lo)
    return RootInterval(tuple(ipoly), int(num), shift, 1 if vlo > 0 else -1)


@dataclass(frozen=True)
class MinimalPolynomial:
    """``P(r) = r^3 - a r^2 - b r - c`` with a selected real root (ascending order)."""

    a: Fraction
    b: Fraction
    c: Fraction
    root: int = 0
    _cache: list = field(default_factory=list, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _to_fraction(getattr(self, name)))
        ipoly = self.integer_form()
        lowp = [Fraction(x) for x in reversed(ipoly)]
        gcd_poly, _, _ = poly_ext_gcd(lowp, _poly_deriv(lowp))
        if len(gcd_poly) > 1:
            raise ValidationError(f"{self.describe()} has a repeated root, hence is reducible")
        intervals = [_dyadic_interval(ipoly, lo, hi) for lo, hi in _isolate_real_roots(ipoly)]
        intervals = [self._reject_rational_root(ipoly, iv) for iv in intervals]
        if not 0 <= self.root < len(intervals):
            raise UsageError(
                f"root index {self.root} out of range: {self.describe()} has "
                f"{len(intervals)} real root(s)"
            )
        self._cache.append(intervals[self.root])
        object.__setattr__(self, "n_real_roots", len(intervals))

    @staticmethod
    def _reject_rational_root(ipoly, iv: RootInterval) -> RootInterval:
        # a rational root p/q has q | leading coefficient; distinct such values are
        # at least 1/lead^2 apart, so once the interval is that narrow each q
        # leaves at most two candidates p
        lead = ipoly[0]
        bits = 2 * lead.bit_length() + 1
        if iv.shift < bits:
            iv = iv.refine(bits - iv.shift)
        lowp = list(reversed(ipoly))
        for q in _divisors(lead):
            for p in range(math.floor(iv.lo * q), math.ceil(iv.hi * q) + 1):
                if _poly_eval(lowp, Fraction(p, q)) == 0:
                    raise ValidationError(f"polynomial has the rational root {Fraction(p, q)}")
        return iv

    def integer_form(self) -> tuple:
        """Primitive integer coefficients (highest degree first, positive leading term)."""
        D = math.lcm(self.a.denominator, self.b.denominator, self.c.denominator)
        coeffs = [D, -self.a * D, -self.b * D, -self.c * D]
        coeffs = [int(x) for x in coeffs]
        g = math.gcd(*coeffs)
        return tuple(x // g for x in coeffs)

    def describe(self) -> str:
        return f"r^3 - ({self.a})r^2 - ({self.b})r - ({self.c})"

    def __call__(self, t):
        return t**3 - self.a * t**2 - self.b * t - self.c

    def root_interval(self, bits=0) -> RootInterval:
        """Isolating interval of the selected root with width at most ``2**-bits``."""
        best = self._cache[-1]
        if best.shift < bits:
            best = best.refine(bits - best.shift)
            self._cache[-1] = best
        return best

    def depressed(self) -> "MinimalPolynomial":
        """Polynomial ``t^3 - m t - n`` of ``t = r - a/3`` (same root index)."""
        a, b, c = self.a, self.b, self.c
        m = a * a / 3 + b
        n = 2 * a**3 / 27 + a * b / 3 + c
        return MinimalPolynomial(Fraction(0), m, n, self.root)

    def to_depressed(self, e: "CubicFieldElement") -> "CubicFieldElement":
        """Re-express ``e`` in the power basis of ``t = r - a/3``."""
        if e.poly != self:
            raise UsageError("element belongs to a different field")
        h = self.a / 3
        c0, c1, c2 = e.coeffs
        return CubicFieldElement(c0 + c1 * h + c2 * h * h, c1 + 2 * c2 * h, c2, self.depressed())

    def element(self, *coeffs) -> "CubicFieldElement":
        return CubicFieldElement(*coeffs, poly=self)

    def generator(self) -> "CubicFieldElement":
        return CubicFieldElement(0, 1, 0, self)


def select_root(P: MinimalPolynomial, k: int) -> RootInterval:
    """Isolating interval for the ``k``-th real root of ``P`` in ascending order."""
    return MinimalPolynomial(P.a, P.b, P.c, k).root_interval()


# ---------------------------------------------------------------------------
# field elements


class CubicFieldElement:
    """``c0 + c1*r + c2*r^2`` in ``Q[r]/P(r)``, embedded via the selected real root."""

    __slots__ = ("coeffs", "poly")

    def __init__(self, c0=0, c1=0, c2=0, poly: MinimalPolynomial | None = None):
        if poly is None:
            raise UsageError("a CubicFieldElement needs its MinimalPolynomial")
        self.coeffs = (_to_fraction(c0), _to_fraction(c1), _to_fraction(c2))
        self.poly = poly

    @classmethod
    def _raw(cls, coeffs, poly):
        obj = cls.__new__(cls)
        obj.coeffs = coeffs
        obj.poly = poly
        return obj

    # -- coercion ---------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, CubicFieldElement):
            if other.poly != self.poly:
                raise UsageError("operands belong to different fields")
            return other.coeffs
        if isinstance(other, (int, Fraction)):
            return (Fraction(other), Fraction(0), Fraction(0))
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        x = self.coeffs
        return self._raw((x[0] + o[0], x[1] + o[1], x[2] + o[2]), self.poly)

    __radd__ = __add__

    def __neg__(self):
        x = self.coeffs
        return self._raw((-x[0], -x[1], -x[2]), self.poly)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        x = self.coeffs
        return self._raw((x[0] - o[0], x[1] - o[1], x[2] - o[2]), self.poly)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, int):
            x = self.coeffs
            return self._raw((x[0] * other, x[1] * other, x[2] * other), self.poly)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        x0, x1, x2 = self.coeffs
        y0, y1, y2 = o
        d0 = x0 * y0
        d1 = x0 * y1 + x1 * y0
        d2 = x0 * y2 + x1 * y1 + x2 * y0
        d3 = x1 * y2 + x2 * y1
        d4 = x2 * y2
        a, b, c = self.poly.a, self.poly.b, self.poly.c
        # r^3 = a r^2 + b r + c ;  r^4 = (a^2+b) r^2 + (ab+c) r + ac
        return self._raw(
            (
                d0 + c * d3 + a * c * d4,
                d1 + b * d3 + (a * b + c) * d4,
                d2 + a * d3 + (a * a + b) * d4,
            ),
            self.poly,
        )

    __rmul__ = __mul__

    def inverse(self) -> "CubicFieldElement":
        if self.is_zero():
            raise DomainError("inversion of zero in a cubic field")
        P = self.poly
        modulus = [-P.c, -P.b, -P.a, Fraction(1)]
        d, u, _ = poly_ext_gcd(list(self.coeffs), modulus)
        if len(d) != 1:
            raise DomainError("element is not invertible; minimal polynomial is reducible")
        u = list(u) + [Fraction(0)] * (3 - len(u))
        return self._raw(tuple(u[:3]), P)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise DomainError("division by zero")
            x = self.coeffs
            return self._raw(tuple(v / other for v in x), self.poly)
        if isinstance(other, CubicFieldElement):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self._raw((Fraction(1), Fraction(0), Fraction(0)), self.poly)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        o = self._lift(other) if isinstance(other, (CubicFieldElement, int, Fraction)) else None
        if o is None:
            return NotImplemented
        return self.coeffs == o

    def __hash__(self):
        return hash((self.coeffs, self.poly))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return self.coeffs[1] == 0 and self.coeffs[2] == 0

    def _int_form(self):
        L = math.lcm(*(c.denominator for c in self.coeffs))
        return L, tuple(int(c * L) for c in self.coeffs)

    def _scaled_bounds(self, bits):
        """Integers ``(lo, hi, L, k)`` with ``lo/(L*4^k) <= self <= hi/(L*4^k)``."""
        L, (C0, C1, C2) = self._int_form()
        iv = self.poly.root_interval(bits)
        n, k = iv.num, iv.shift
        sq = (n * n, (n + 1) * (n + 1))
        if n >= 0:
            t2 = sq
        elif n + 1 <= 0:
            t2 = (sq[1], sq[0])
        else:
            t2 = (0, max(sq))
        s = 1 << k
        lin = sorted((C1 * n * s, C1 * (n + 1) * s))
        quad = sorted((C2 * t2[0], C2 * t2[1]))
        base = C0 * s * s
        return base + lin[0] + quad[0], base + lin[1] + quad[1], L, k

    def sign(self) -> int:
        if self.is_zero():
            return 0
        if self.is_rational():
            c = self.coeffs[0]
            return (c > 0) - (c < 0)
        bits = max(64, self.poly.root_interval().shift)
        while True:
            lo, hi, _, _ = self._scaled_bounds(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2

    def enclosure(self, rel_bits):
        """Rational interval ``(lo, hi)`` around the value, relative width below ``2**-rel_bits``."""
        if self.is_rational():
            return self.coeffs[0], self.coeffs[0]
        bits = max(64, rel_bits + 8)
        while True:
            lo, hi, L, k = self._scaled_bounds(bits)
            if (lo > 0 or hi < 0) and (hi - lo) << (rel_bits + 1) <= min(abs(lo), abs(hi)):
                den = L << (2 * k)
                # round outward to short dyadics so downstream Fraction work stays cheap
                m = rel_bits + 8 + den.bit_length() - min(abs(lo), abs(hi)).bit_length()
                if m >= 0:
                    qlo, qhi = (lo << m) // den, -((-hi << m) // den)
                    return Fraction(qlo, 1 << m), Fraction(qhi, 1 << m)
                d2 = den << -m
                return Fraction(lo // d2 << -m), Fraction(-(-hi // d2) << -m)
            bits *= 2

    def to_mpf(self, ctx):
        if self.is_zero():
            return ctx.mpf(0)
        lo, hi = self.enclosure(ctx.prec + 4)
        mid = (lo + hi) / 2
        return ctx.mpf(mid.numerator) / mid.denominator

    def __float__(self):
        lo, hi = self.enclosure(60)
        return float((lo + hi) / 2)

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __repr__(self):
        return f"CubicFieldElement({self})"

    def __str__(self):
        return format_field_element(self)


def format_field_element(e: CubicFieldElement) -> str:
    """Canonical text ``c0 + c1*r + c2*r^2`` (always all three terms)."""
    c0, c1, c2 = e.coeffs

    def term(c, suffix, first):
        sign = "-" if c < 0 else ("" if first else "+")
        body = f"{abs(c)}{suffix}"
        return f"{sign}{body}" if first else f" {sign} {body}"

    return term(c0, "", True) + term(c1, "*r", False) + term(c2, "*r^2", False)


_TERM_RE = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>\d+(?:/\d+)?|\d*\.\d+)\s*\*?\s*)?
        (?P<var>r(?:\s*\^\s*(?P<pow>\d+))?)?\s*""",
    re.VERBOSE,
)


def parse_field_element(text: str, poly: MinimalPolynomial) -> CubicFieldElement:
    """Parse ``"1/2 - 3*r + r^2"``-style text into an element of ``Q[r]``.

    Powers above 2 are reduced modulo the minimal polynomial.
    """
    s = text.strip()
    if not s:
        raise ValidationError("empty field element")
    pos = 0
    total = CubicFieldElement(0, 0, 0, poly)
    r = poly.generator()
    first = True
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if m is None or m.end() == pos or not (m.group("coef") or m.group("var")):
            raise ValidationError(f"cannot parse field element {text!r} near position {pos}")
        if not first and not m.group("sign"):
            raise ValidationError(f"missing operator in {text!r} near position {pos}")
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("sign") == "-":
            coef = -coef
        power = 0
        if m.group("var"):
            power = int(m.group("pow")) if m.group("pow") else 1
        total = total + (r**power) * coef
        pos = m.end()
        first = False
    return total


# ---------------------------------------------------------------------------
# decimal rendering


def _as_fraction_interval(x, rel_bits):
    if isinstance(x, CubicFieldElement):
        return x.enclosure(rel_bits)
    if isinstance(x, (int, Fraction)):
        return Fraction(x), Fraction(x)
    man, exp = x.man_exp  # mpf: exact dyadic value
    v = Fraction(int(man)) * (Fraction(2) ** int(exp))
    return v, v


def truncate_decimal(x, digits: int, mode: str = "truncate") -> str:
    """Render ``x`` with ``digits`` significant digits.

    ``mode`` is ``"truncate"`` (default) or ``"round"`` (half away from zero).
    Exact inputs render their true digits; mpf inputs render the digits of the
    stored binary value.
    """
    return _render(lambda bits: _as_fraction_interval(x, bits), digits, mode)


def render_ratio(num, den, digits: int, mode: str = "truncate") -> str:
    """Render ``num / den`` from enclosures of both, avoiding a field inversion."""

    def provider(bits):
        alo, ahi = _as_fraction_interval(num, bits)
        blo, bhi = _as_fraction_interval(den, bits)
        if blo <= 0 <= bhi:
            if blo == bhi == 0:
                raise DomainError("ratio with zero denominator")
            return None
        qs = (alo / blo, alo / bhi, ahi / blo, ahi / bhi)
        return min(qs), max(qs)

    return _render(provider, digits, mode)


def _render(provider, digits, mode):
    if mode not in ("truncate", "round"):
        raise UsageError(f"unknown rendering mode {mode!r}")
    if digits < 1:
        raise UsageError("digits must be >= 1")
    bump = Fraction(1, 2) if mode == "round" else Fraction(0)
    rel = int(digits * 3.33) + 16
    while True:
        enc = provider(rel)
        rel *= 2
        if enc is None:
            continue
        lo, hi = enc
        if lo == 0 and hi == 0:
            return "0"
        neg = hi < 0
        if neg:
            lo, hi = -hi, -lo
        if lo <= 0:
            continue
        e_lo = _floor_log10(lo)
        if e_lo != _floor_log10(hi):
            continue
        scale = Fraction(10) ** (digits - 1 - e_lo)
        n_lo, n_hi = math.floor(lo * scale + bump), math.floor(hi * scale + bump)
        if n_lo != n_hi:
            continue
        if len(str(n_lo)) > digits:  # rounded up to the next power of ten
            n_lo //= 10
            e_lo += 1
        return ("-" if neg else "") + _place_point(str(n_lo), e_lo)


def _floor_log10(v: Fraction) -> int:
    e = len(str(v.numerator)) - len(str(v.denominator))
    while Fraction(10) ** e > v:
        e -= 1
    while Fraction(10) ** (e + 1) <= v:
        e += 1
    return e


def _place_point(ds: str, e: int) -> str:
    if e >= 0:
        if e + 1 >= len(ds):
            return ds + "0" * (e + 1 - len(ds))
        return ds[: e + 1] + "." + ds[e + 1 :]
    return "0." + "0" * (-e - 1) + ds


def parse_decimal(text: str) -> Fraction:
    """The exact rational a decimal literal denotes (``"0.1"`` is ``1/10``)."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a decimal number: {text!r}") from exc


# ---------------------------------------------------------------------------
# backends


class CubicBackend:
    """Exact arithmetic in ``Q[r]``."""

    kind = "cubic"
    exact = True

    def __init__(self, poly: MinimalPolynomial, precision: int = DEFAULT_PRECISION):
        self.poly = poly
        self.ctx = make_context(precision)

    def coerce(self, v):
        if isinstance(v, CubicFieldElement):
            if v.poly != self.poly:
                raise UsageError("element belongs to a different field")
            return v
        return CubicFieldElement(_to_fraction(v), 0, 0, self.poly)

    def sign(self, v, err=0) -> int:
        if isinstance(v, int):
            return (v > 0) - (v < 0)
        return v.sign()

    def is_zero(self, v) -> bool:
        return v == 0 if isinstance(v, int) else v.is_zero()

    def ratio(self, num, den):
        return num / den

    def to_mpf(self, v):
        if isinstance(v, (int, Fraction)):
            return self.ctx.mpf(Fraction(v).numerator) / Fraction(v).denominator
        return v.to_mpf(self.ctx)

    def dot_error(self, h, X):
        return 0


class RationalBackend:
    """Exact rational arithmetic (dependent-by-construction targets)."""

    kind = "rational"
    exact = True

    def __init__(self, precision: int = DEFAULT_PRECISION):
        self.ctx = make_context(precision)

    def coerce(self, v):
        return _to_fraction(v)

    def sign(self, v, err=0) -> int:
        return (v > 0) - (v < 0)

    def is_zero(self, v) -> bool:
        return v == 0

    def ratio(self, num, den):
        return Fraction(num) / den

    def to_mpf(self, v):
        v = Fraction(v)
        return self.ctx.mpf(v.numerator) / v.denominator

    def dot_error(self, h, X):
        return 0


class BigRealBackend:
    """Floating arithmetic at a uniform working precision (bits).

    Signs are only trusted when the value clears a caller-supplied error bound;
    otherwise :class:`PrecisionExhausted` is raised.
    """

    kind = "bigreal"
    exact = False

    def __init__(self, precision: int = DEFAULT_PRECISION):
        if precision < 64:
            raise ValidationError("BigReal precision must be at least 64 bits")
        self.precision = precision
        self.ctx = make_context(precision)
        self.ulp = self.ctx.mpf(2) ** (-precision)

    def coerce(self, v):
        if isinstance(v, Fraction):
            return self.ctx.mpf(v.numerator) / v.denominator
        if isinstance(v, CubicFieldElement):
            return v.to_mpf(self.ctx)
        return self.ctx.mpf(v)

    def sign(self, v, err=0) -> int:
        if abs(v) <= err:
            raise PrecisionExhausted(
                f"sign undecidable at {self.precision} bits (|value| <= {self.ctx.nstr(err, 5)})"
            )
        return 1 if v > 0 else -1

    def is_zero(self, v) -> bool:
        return v == 0

    def ratio(self, num, den):
        return num / den

    def to_mpf(self, v):
        return self.ctx.mpf(v)

    def dot_error(self, h, X):
        """Bound on the rounding error of ``sum(h_i * x_i)`` evaluated left to right."""
        mag = sum(abs(hi) * abs(xi) for hi, xi in zip(h, X))
        return mag * self.ulp * 8


def make_context(precision: int) -> MPContext:
    ctx = MPContext()
    ctx.prec = precision
    return ctx
