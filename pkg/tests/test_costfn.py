from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asrg import CostFunction, DomainError, MalformedCostFunction, SmoothnessError, compute_psi, validate
from asrg.costfn import format_rational, parse_rational
from asrg.instance import generate

from conftest import linear


def test_affine_is_valid():
    assert validate(linear(1, 1), 10).ok


def test_slope_jump_is_reported():
    fn = CostFunction([(0, [0, 1]), (1, [-1, 2])])
    rep = validate(fn, 10)
    assert not rep.ok
    assert rep.kinds() == {"slope-continuity"}
    assert rep.violations[0].location[0] == 1


def test_paper_gadget_edge_is_c1(table2_e1):
    # value and slope agree from both sides at both breakpoints
    assert validate(table2_e1, 2000).ok
    for b in table2_e1.breakpoints[1:]:
        left, right = table2_e1.pieces[0 if b == 599 else 1], table2_e1.pieces[1 if b == 599 else 2]
        assert abs(float(left.value(b) - right.value(b))) <= 1e-6
        assert abs(float(left.d1(b) - right.d1(b))) <= 1e-6


def test_paper_affine_value():
    fn = CostFunction.polynomial(670, Fraction("0.02"))
    assert fn.eval(500) == 680


def test_square_derivatives():
    fn = CostFunction.polynomial(0, 0, 1)
    assert (fn.eval(3), fn.eval_d1(3), fn.eval_d2(3)) == (9, 6, 2)


def test_breakpoint_uses_right_piece():
    fn = CostFunction([(0, [0, 1]), (2, [5, 1])])
    assert fn.eval(2) == 7
    assert fn.eval(Fraction(19, 10)) == Fraction(19, 10)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        linear().eval(-1)


@pytest.mark.parametrize(
    "pieces",
    [[], [(1, [0, 1])], [(0, [0, 1]), (0, [0, 1])], [(0, [0, 1]), (2, [0, 1]), (1, [0, 1])], [(0, [0, 1, 0, 0, 1])]],
)
def test_structural_errors(pieces):
    with pytest.raises(MalformedCostFunction):
        CostFunction(pieces)


def test_psi_examples():
    assert compute_psi([linear()], 4).psi == 4
    assert compute_psi([CostFunction.polynomial(0, 1, 1)], 2).psi == 6
    with pytest.raises(SmoothnessError):
        compute_psi([CostFunction.polynomial(1, 0, 1)], 2)


def test_psi_against_dense_sampling():
    fn = CostFunction.polynomial(Fraction(1, 2), Fraction(3, 10), Fraction(1, 5), Fraction(1, 50))
    cap = 3
    xs = np.linspace(0, cap, 20001)
    sampled = max(cap, *(float(np.max(np.abs(g(xs)))) for g in (fn.eval, fn.eval_d1, fn.eval_d2)),
                  float(np.max(1 / fn.eval_d1(xs))))
    assert compute_psi([fn], cap).psi == pytest.approx(sampled, rel=1e-9)


def test_serialization_round_trip(table2_e1):
    again = CostFunction.from_dict(table2_e1.to_dict())
    assert again == table2_e1
    assert parse_rational(format_rational(Fraction(-7, 3))) == Fraction(-7, 3)
    with pytest.raises(ValueError):
        parse_rational("0.5")


fns = st.sampled_from(
    [generate(s, 3, 3, fam).edges[e] for s in range(4) for fam in ("affine", "quadratic", "mixed-piecewise") for e in range(3)]
)


@given(fns, st.floats(0, 1), st.floats(0, 1e-3))
def test_lipschitz_in_psi(fn, u, d):
    cap = 6
    psi = compute_psi([fn], cap).psi
    x = u * (cap - d)
    assert abs(float(fn.eval(x + d)) - float(fn.eval(x))) <= d * psi * (1 + 1e-9) + 1e-12


@given(fns)
def test_increasing_and_convex(fn):
    xs = np.random.default_rng(0).uniform(0, 6, 10_000)
    assert np.all(fn.eval_d1(xs) > 0)
    assert np.all(fn.eval_d2(xs) >= 0)


@given(fns, st.floats(0.01, 5.9))
def test_derivative_matches_finite_difference(fn, x):
    if any(abs(x - float(b)) < 1e-3 for b in fn.breakpoints[1:]):
        return
    h = 1e-6
    fd = (float(fn.eval(x + h)) - float(fn.eval(x - h))) / (2 * h)
    assert fd == pytest.approx(float(fn.eval_d1(x)), rel=1e-6)
