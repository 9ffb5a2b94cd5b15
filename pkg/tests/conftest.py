import sys

import pytest

from sva.engine import Target, run
from sva.scalars import MinimalPolynomial


def cube_root_13_target():
    P = MinimalPolynomial(0, 0, 13)
    r = P.generator()
    return Target.cubic(P, [1, r, r * r])


def heptagon_target():
    # 2cos(pi/7) is the largest root of r^3 - r^2 - 2r + 1
    P = MinimalPolynomial(1, 2, -1, 2)
    r = P.generator()
    return Target.cubic(P, [1, r, r * r])


@pytest.fixture(scope="session")
def cbrt13():
    return cube_root_13_target()


@pytest.fixture(scope="session")
def heptagon():
    return heptagon_target()


@pytest.fixture(scope="session")
def cbrt13_run(cbrt13):
    return run(cbrt13, 450)


@pytest.fixture(scope="session")
def heptagon_run(heptagon):
    return run(heptagon, 300)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        if getattr(mod, "__name__", "").endswith("test_acceptance"):
            lines = getattr(mod, "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
