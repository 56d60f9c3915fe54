from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asrg import CostFunction, Instance, best_response, check, generate, marginal, oracle_solve
from asrg.verify import PreconditionError

from conftest import linear

EQ = np.array([[1.0, 1.0], [0.5, 0.5]])


def test_marginal_examples():
    assert marginal(linear(), 3, 1) == 4
    assert marginal(linear(2, 1), 3, 0) == 7
    # gadget edge from the paper's latency table
    assert marginal(CostFunction.polynomial(208, Fraction(6, 100)), 100, 100) == pytest.approx(220)


def test_marginal_rejects_own_above_total():
    with pytest.raises(PreconditionError):
        marginal(linear(), 1, 2)


def test_check_equilibrium(two_by_two):
    rep = check(two_by_two, EQ, 1e-15)
    assert rep.passed and rep.max_gap == 0
    np.testing.assert_allclose(rep.per_player_min_marginal, [2.5, 2.0])


def test_check_wrong_edge():
    inst = Instance((linear(), linear(1, 10)), (1,))
    rep = check(inst, [[0.0, 1.0]], 1)
    # used edge: 10 + 1 + 1; best alternative: empty edge 1 at 0
    assert rep.max_gap == 12 and not rep.passed


def test_check_demand_mismatch_names_player(two_by_two):
    with pytest.raises(PreconditionError, match="player 1"):
        check(two_by_two, [[1, 1], [0.5, 0.4]], 1e-6)


def test_check_permutation_invariant():
    inst = Instance((linear(), linear(2, 1)), (1, 1))
    f = np.array([[0.7, 0.3], [0.6, 0.4]])
    a, b = check(inst, f, 1), check(inst, f[::-1], 1)
    np.testing.assert_allclose(a.per_player_gap[::-1], b.per_player_gap)


def test_best_response_at_equilibrium(two_by_two):
    for i in range(2):
        assert best_response(two_by_two, EQ, i)[1] >= -1e-8


def test_best_response_single_edge():
    inst = Instance((linear(),), (2, 1))
    prof, delta = best_response(inst, [[2.0], [1.0]], 0)
    assert prof.flow[0, 0] == pytest.approx(2) and delta == pytest.approx(0, abs=1e-12)


def test_best_response_repairs_perturbation(two_by_two):
    f = EQ.copy()
    f[0] = [0.9, 1.1]
    prof, delta = best_response(two_by_two, f, 0)
    assert delta < 0
    np.testing.assert_allclose(prof.flow, EQ, atol=1e-6)


def test_oracle_two_by_two(two_by_two):
    np.testing.assert_allclose(oracle_solve(two_by_two).flow, EQ, atol=1e-12)


def test_oracle_single():
    assert oracle_solve(Instance((linear(),), (Fraction(3, 2),))).flow[0, 0] == pytest.approx(1.5)


def test_oracle_quadratics_self_certify():
    # x^2 has zero slope at the origin, which the smoothness bound forbids; x^2 + x/10 keeps the shape
    inst = Instance((CostFunction.polynomial(0, Fraction(1, 10), 1), CostFunction.polynomial(0, 1, 1)), (2, 1))
    assert check(inst, oracle_solve(inst), 1e-9).passed


@given(st.integers(0, 200), st.integers(1, 3), st.integers(1, 3), st.sampled_from(["affine", "quadratic"]))
def test_oracle_solutions_are_best_responses(seed, n, m, fam):
    inst = generate(seed, n, m, fam)
    f = oracle_solve(inst)
    for i in range(n):
        assert best_response(inst, f, i)[1] >= -1e-9 * float(inst.demands[i]) - 1e-12


@given(st.integers(0, 100), st.floats(0, 5), st.floats(0, 1), st.floats(1e-3, 1))
def test_marginal_strictly_increasing(seed, total, frac, step):
    fn = generate(seed, 1, 1, "mixed-piecewise").edges[0]
    own = frac * total
    assert marginal(fn, total + step, own) > marginal(fn, total, own)
    assert marginal(fn, total + step, own + step) > marginal(fn, total + step, own)
