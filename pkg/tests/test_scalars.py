import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sva.errors import DomainError, PrecisionExhausted, UsageError, ValidationError
from sva.scalars import (
    BigRealBackend,
    CubicFieldElement,
    MinimalPolynomial,
    format_field_element,
    parse_decimal,
    parse_field_element,
    render_ratio,
    select_root,
    truncate_decimal,
)

CBRT13 = MinimalPolynomial(0, 0, 13)
HEPTAGON = MinimalPolynomial(1, 2, -1, 2)
POLYS = [CBRT13, HEPTAGON, MinimalPolynomial(0, 1, 1), MinimalPolynomial(Fraction(1, 2), 3, Fraction(-7, 3), 1)]

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)
triples = st.tuples(rationals, rationals, rationals)


def elem(P, t):
    return CubicFieldElement(*t, poly=P)


def test_mul_generator_squared():
    for P in POLYS:
        r = P.generator()
        assert (r * r).coeffs == (0, 0, 1)


def test_cube_reduces_to_c():
    r = CBRT13.generator()
    assert (CBRT13.element(0, 0, 1) * r).coeffs == (13, 0, 0)


def test_inverse_of_generator():
    inv = CBRT13.generator().inverse()
    assert inv.coeffs == (0, 0, Fraction(1, 13))
    assert (inv * CBRT13.generator()).coeffs == (1, 0, 0)


def test_inverse_of_zero():
    with pytest.raises(DomainError):
        CBRT13.element(0).inverse()


def test_mixed_fields_rejected():
    with pytest.raises(UsageError):
        CBRT13.generator() + HEPTAGON.generator()


@pytest.mark.parametrize("coeffs,expected", [((0, 0, 0), 0), ((-2, 1, 0), 1), ((-3, 1, 0), -1)])
def test_sign_examples(coeffs, expected):
    assert CBRT13.element(*coeffs).sign() == expected


def test_select_root_cbrt13():
    iv = select_root(CBRT13, 0)
    assert 2 <= iv.lo < iv.hi <= 3
    assert _poly(CBRT13, iv.lo) < 0 < _poly(CBRT13, iv.hi)


def test_select_root_heptagon():
    iv = select_root(HEPTAGON, 2).refine(40)
    assert abs(float(iv.lo) - 2 * math.cos(math.pi / 7)) < 1e-11


def test_root_index_out_of_range():
    with pytest.raises(UsageError):
        MinimalPolynomial(0, 0, 2, 1)


@pytest.mark.parametrize("abc", [(0, 0, 0), (0, 0, 8), (6, -11, 6), (1, 0, 0), (0, 1, 0), (Fraction(3, 2), 0, 0)])
def test_reducible_rejected(abc):
    with pytest.raises(ValidationError):
        MinimalPolynomial(*abc)


def test_rational_root_with_denominator():
    # 8r^3 - 1 has the root 1/2: r^3 = 1/8
    with pytest.raises(ValidationError):
        MinimalPolynomial(0, 0, Fraction(1, 8))


def _poly(P, t):
    return t**3 - P.a * t**2 - P.b * t - P.c


def test_refinement_halves_width():
    iv = select_root(HEPTAGON, 1)
    w0 = iv.width
    for n in range(1, 30):
        r = iv.refine(n)
        assert r.width <= w0 / 2**n
        assert _poly(HEPTAGON, r.lo) * _poly(HEPTAGON, r.hi) < 0


@settings(max_examples=150, deadline=None)
@given(triples, triples, triples, st.sampled_from(POLYS))
def test_field_axioms(x, y, z, P):
    a, b, c = elem(P, x), elem(P, y), elem(P, z)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assume(not a.is_zero())
    assert a * a.inverse() == 1
    assert (a / a) == 1


def _numeric_root(P, prec):
    ctx = mpmath.MPContext()
    ctx.prec = prec
    iv = P.root_interval(prec + 10)
    return ctx, ctx.mpf(iv.lo.numerator) / iv.lo.denominator


def test_sign_agrees_with_high_precision():
    rng = random.Random(20240917)
    for _ in range(1000):
        P = rng.choice(POLYS)
        ctx, rho = _numeric_root(P, 240)
        t = tuple(Fraction(rng.randint(-400, 400), rng.randint(1, 30)) for _ in range(3))
        e = elem(P, t)
        v = t[0] + t[1] * rho + t[2] * rho * rho
        if abs(v) < ctx.mpf(2) ** -150:
            continue
        assert e.sign() == (1 if v > 0 else -1)


def test_sign_of_tiny_element():
    # 2809 - 66r - 480r^2 is about 4.46e-8 for r = cbrt(13)
    e = CBRT13.element(2809, -66, -480)
    assert e.sign() == 1
    assert abs(float(e) - 4.457137778627343e-08) < 1e-20


def test_depressed_form():
    H = HEPTAGON
    D = H.depressed()
    assert D.a == 0
    assert D.b == Fraction(1, 3) + 2
    r = H.generator()
    t = H.to_depressed(r)
    # t = r - a/3 expressed in the depressed basis is its generator plus a/3
    assert t.coeffs == (Fraction(1, 3), 1, 0)
    assert abs(float(t) - float(r)) < 1e-15


def test_text_round_trip():
    e = CBRT13.element(Fraction(-3, 7), 2, Fraction(5, 2))
    text = format_field_element(e)
    assert text == "-3/7 + 2*r + 5/2*r^2"
    assert parse_field_element(text, CBRT13) == e
    assert parse_field_element("r^3", CBRT13) == 13


def test_parse_rejects_garbage():
    with pytest.raises(ValidationError):
        parse_field_element("2*q", CBRT13)


def test_truncate_and_round():
    x = Fraction(2, 3)
    assert truncate_decimal(x, 5) == "0.66666"
    assert truncate_decimal(x, 5, "round") == "0.66667"
    assert truncate_decimal(Fraction(-2, 3), 3) == "-0.666"
    assert truncate_decimal(Fraction(12345), 3) == "12300"
    mpmath.mp.dps = 60
    r = CBRT13.generator()
    assert truncate_decimal(r, 24) == mpmath.nstr(mpmath.cbrt(13), 40)[:25]
    assert render_ratio(r * r, CBRT13.element(1), 23) == mpmath.nstr(mpmath.cbrt(13) ** 2, 40)[:24]


def test_parse_decimal_exact():
    assert parse_decimal("0.1") == Fraction(1, 10)
    assert parse_decimal("-2.5e-3") == Fraction(-1, 400)
    with pytest.raises(ValidationError):
        parse_decimal("abc")


def test_bigreal_precision_floor():
    with pytest.raises(ValidationError):
        BigRealBackend(32)
    be = BigRealBackend(64)
    assert be.sign(be.coerce(1), be.ulp) == 1
    with pytest.raises(PrecisionExhausted):
        be.sign(be.ulp / 2, be.ulp)
