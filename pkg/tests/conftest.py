from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from asrg import CostFunction, Instance

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


def linear(a=1, b=0) -> CostFunction:
    """``a x + b``."""
    return CostFunction.polynomial(Fraction(b), Fraction(a))


@pytest.fixture
def two_by_two() -> Instance:
    """Two identical edges ``l(x) = x`` and demands (2, 1); equilibrium f1=(1,1), f2=(1/2,1/2)."""
    return Instance((linear(), linear()), (2, 1))


@pytest.fixture
def table2_e1() -> CostFunction:
    """First edge of the paper's gadget latency table, glued C1 at both breakpoints."""
    t2 = Fraction(599) + Fraction(119, 173)
    return CostFunction(
        [
            (0, [Fraction("293.1103"), Fraction("0.1694")]),
            (599, [Fraction(118472907676, 1190000), Fraction(-394202776, 1190000), Fraction(329219, 1190000)]),
            (t2, [Fraction(65), Fraction("0.55")]),
        ]
    )


CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the one-line outcome of an acceptance criterion."""

    def record(number: int, passed: bool, detail: str):
        CRITERIA[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(CRITERIA[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
