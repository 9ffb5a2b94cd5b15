import mpmath
import pytest

from sva.engine import Target, run
from sva.errors import LoopError, UsageError
from sva.loops import (
    LoopScanner,
    charpoly,
    extract_lambda,
    field_rank,
    loop_scan,
    poly_eval,
    recover_ratios,
    round_trip,
    verify_loop,
)


@pytest.fixture(scope="module")
def cbrt13_scanner(cbrt13, cbrt13_run):
    sc = LoopScanner(cbrt13)
    for st in cbrt13_run.states:
        sc(st)
    return sc


def test_charpoly_of_identity_and_companion():
    assert charpoly([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == [1, -3, 3, -1]
    # companion matrix of xi^3 - 2 xi - 5
    C = [[0, 0, 5], [1, 0, 2], [0, 1, 0]]
    F = charpoly(C)
    assert F == [5, 2, 0, -1]
    assert poly_eval(F, 2) == 5 + 4 - 8


def test_heptagon_loop(heptagon, heptagon_run):
    assert loop_scan(heptagon_run.states, heptagon) == (1, 3)
    loop = extract_lambda(1, 3, heptagon_run.states, heptagon)
    assert loop.certified and loop.unit
    assert all(verify_loop(loop, heptagon).values())
    st_s, st_t = heptagon_run.states[1], heptagon_run.states[4]
    assert all(a == loop.lam * b for a, b in zip(st_t.cof, st_s.cof))
    assert poly_eval(loop.F, loop.lam) == 0


def test_heptagon_round_trip(heptagon, heptagon_run):
    loop = extract_lambda(1, 3, heptagon_run.states, heptagon)
    recover_ratios(loop)
    assert round_trip(loop, heptagon) == {"x0/x2": True, "x1/x2": True}
    num, den = loop.ratios["x1/x2"]
    assert poly_eval(num, loop.lam) / poly_eval(den, loop.lam) == heptagon.X[1] / heptagon.X[2]


def test_cbrt13_first_collision(cbrt13_scanner, cbrt13_run, cbrt13):
    assert cbrt13_scanner.first == (0, 103)
    occ = cbrt13_scanner.occurrences(cbrt13_run.states[0], cbrt13_run.states)
    assert 307 in occ and 410 in occ


def test_cbrt13_loop(cbrt13, cbrt13_run):
    loop = extract_lambda(0, 103, cbrt13_run.states, cbrt13)
    checks = verify_loop(loop, cbrt13)
    assert all(checks.values()), checks
    assert loop.F == [1, -22435923, 8427, -1]
    assert loop.lam.coeffs == (2809, -66, -480)
    assert field_rank([loop.lam**0, loop.lam, loop.lam**2]) == 3
    assert round_trip(loop, cbrt13) == {"x0/x2": True, "x1/x2": True}
    doc = loop.to_json()
    assert doc["certified"] and doc["p"] == 103
    assert doc["lambda"]["field"] == ["2809", "-66", "-480"]


def test_loop_validation(heptagon, heptagon_run):
    with pytest.raises(UsageError):
        extract_lambda(1, 0, heptagon_run.states, heptagon)
    with pytest.raises(UsageError):
        extract_lambda(1, 10_000, heptagon_run.states, heptagon)
    with pytest.raises(LoopError):
        extract_lambda(1, 2, heptagon_run.states, heptagon)


def test_bigreal_candidate_is_uncertified(heptagon):
    r = heptagon.poly.generator()
    ctx = mpmath.MPContext()
    ctx.prec = 256
    t = Target.bigreal([ctx.mpf(1), r.to_mpf(ctx), (r * r).to_mpf(ctx)], precision=256)
    res = run(t, 30)
    first = loop_scan(res.states, t)
    assert first == (1, 3)
    loop = extract_lambda(*first, res.states, t)
    assert not loop.certified
    assert loop.notes


def test_no_collision_for_exponential_triple():
    ctx = mpmath.MPContext()
    ctx.prec = 256
    e = ctx.e
    t = Target.bigreal([ctx.mpf(1), e, e * e], precision=256)
    res = run(t, 1000)
    assert loop_scan(res.states, t) is None
