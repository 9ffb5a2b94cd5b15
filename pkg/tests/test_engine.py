import json
import math
import random
from fractions import Fraction

import mpmath
import pytest

from sva.engine import (
    CSV_HEADER,
    Target,
    check_state,
    init,
    run,
    step,
    trace_record,
    write_trace_csv,
    write_trace_jsonl,
)
from sva.errors import DomainError, ValidationError
from sva.linalg3 import dot
from sva.scalars import MinimalPolynomial

from conftest import cube_root_13_target


def test_target_validation():
    with pytest.raises(ValidationError):
        Target.rational([2, 1, 3])
    with pytest.raises(ValidationError):
        Target.rational([0, 1, 3])
    with pytest.raises(ValidationError):
        Target.bigreal([1, 1, 3])
    with pytest.raises(ValidationError):
        Target.rational([1, 2])


def test_run_needs_a_step(cbrt13):
    with pytest.raises(ValidationError):
        run(cbrt13, 0)


def test_init_cofactors(cbrt13, heptagon):
    st = init(cbrt13)
    r = cbrt13.poly.generator()
    assert st.cof == (1, r, r * r)
    rec = trace_record(st, cbrt13, 23)
    assert rec.ratio10 == ("2.3513346877207574895000", "5.5287748136788721414723")
    rec = trace_record(init(heptagon), heptagon, 15, "round")
    assert rec.ratio10 == ("1.80193773580484", "3.24697960371747")


def test_first_two_steps(cbrt13):
    r = cbrt13.poly.generator()
    s1 = step(init(cbrt13), cbrt13)
    assert s1.pair == (0, 2)
    assert s1.cof == (1, r, r * r - 1)
    s2 = step(s1, cbrt13)
    assert s2.pair == (0, 1)
    assert s2.cof == (1, r - 1, r * r - 1)
    assert trace_record(s2, cbrt13, 23).ratio10 == ("1.3513346877207574895000", "4.5287748136788721414723")


def test_invariants_along_run(cbrt13_run, cbrt13):
    prev = None
    for st in cbrt13_run.states:
        check_state(st, cbrt13)
        if prev is not None:
            # the new cofactor is a difference of two old ones and stays nonnegative
            assert (st.cof[2] - prev.cof[2]).sign() <= 0
            assert (st.cof[0] * st.cof[1] * st.cof[2] - prev.cof[0] * prev.cof[1] * prev.cof[2]).sign() < 0
        prev = st


def test_prime_norm_maximum_grows(cbrt13_run, cbrt13):
    from sva.linalg3 import prime_norm2_numeric

    maxes = [max(prime_norm2_numeric(g, cbrt13) for g in st.G.cols) for st in cbrt13_run.states]
    for s in range(200, len(maxes)):
        assert max(maxes[s - 199 : s + 1]) > maxes[s - 200]


def test_cubic_never_detects_dependence():
    res = run(cube_root_13_target(), 3000)
    assert res.stop_reason == "max_steps"
    assert res.dependence is None
    assert len(res.states) == 3001


def test_rational_dependence():
    t = Target.rational([1, 2, 3])
    res = run(t, 100)
    assert res.stop_reason == "dependence"
    cert = res.dependence
    assert cert.verified
    assert dot(cert.vector, (1, 2, 3)) == 0
    assert cert.vector in ((1, 1, -1), (-1, -1, 1))
    assert cert.s < 50
    with pytest.raises(DomainError):
        step(res.last, t)


def test_rational_dependence_with_fractions():
    t = Target.rational([Fraction(1, 3), Fraction(1, 2), Fraction(5, 6)])
    res = run(t, 200)
    assert res.stop_reason == "dependence"
    assert dot(res.dependence.vector, (2, 3, 5)) == 0


def test_bigreal_dependence_sqrt2():
    ctx = mpmath.MPContext()
    ctx.prec = 256
    s2 = ctx.sqrt(2)
    t = Target.bigreal([ctx.mpf(1), s2, 1 + s2], precision=256)
    res = run(t, 200)
    assert res.stop_reason == "dependence"
    m, n, p = res.dependence.vector
    assert m + p == 0 and n + p == 0
    assert not res.dependence.verified
    assert res.dependence.to_json()["note"] == "numerical - unverified"


def test_bigreal_follows_exact_path(cbrt13):
    r = cbrt13.poly.generator()
    approx = Target.bigreal([1, r, r * r], precision=256)
    a = run(approx, 150)
    e = run(cbrt13, 150)
    assert [st.G for st in a.states] == [st.G for st in e.states]
    for st in a.states:
        check_state(st, approx)


def test_low_precision_exhausts():
    cbrt = mpmath.MPContext()
    cbrt.prec = 64
    x = cbrt.cbrt(13)
    t = Target.bigreal([1, x, x * x], precision=64)
    res = run(t, 5000)
    assert res.stop_reason == "precision"
    assert res.error.step is not None and res.error.step < 5000


def test_random_cubic_targets_stay_valid():
    rng = random.Random(1)
    done = 0
    while done < 4:
        a, b, c = (rng.randint(-6, 6) for _ in range(3))
        try:
            P = MinimalPolynomial(a, b, c)
        except ValidationError:
            continue
        r = P.generator()
        # shift so that 0 < x0 < x1 < x2
        shift = math.floor(float(r)) - 2
        y = r - shift
        X = sorted([1, y, y * y + 1], key=float)
        try:
            t = Target.cubic(P, X)
        except ValidationError:
            continue
        res = run(t, 200, check=True)
        assert res.stop_reason == "max_steps"
        done += 1


def test_trace_outputs(tmp_path, heptagon):
    res = run(heptagon, 20)
    recs = res.trace(15, "round")
    write_trace_jsonl(recs, tmp_path / "t.jsonl")
    write_trace_csv(recs, tmp_path / "t.csv")
    lines = (tmp_path / "t.jsonl").read_text().splitlines()
    assert len(lines) == 21
    first = json.loads(lines[0])
    assert set(first) == {"s", "pair", "cof", "ratio10", "ratio02", "G", "B"}
    assert first["pair"] is None and first["G"] == [1, 0, 0, 0, 1, 0, 0, 0, 1]
    second = json.loads(lines[1])
    assert len(second["cof"]) == 3 and len(second["G"]) == 9
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header == CSV_HEADER
    write_trace_jsonl(run(heptagon, 20).trace(15, "round"), tmp_path / "u.jsonl")
    assert (tmp_path / "u.jsonl").read_bytes() == (tmp_path / "t.jsonl").read_bytes()
