from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asrg import CostFunction, FlowProfile, Instance, bin_search_edge, fixup_negative, graphflow, redistrib
from asrg.graphflow import GraphFlowResult, InvariantError, PreconditionError

from conftest import linear
from contracts import all_contracts, random_pairs


# -- bin_search_edge ------------------------------------------------------------


def closed_form_root(k, c0, c1, c2, target):
    """Root of k(c2 x^2 + c1 x + c0) + x(2 c2 x + c1) = target, by the quadratic formula."""
    a, b, c = (k + 2) * c2, (k + 1) * c1, k * c0 - target
    if a == 0:
        return -c / b
    return (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)


def test_bin_search_examples():
    assert bin_search_edge(1, linear(), 3, 1e-8) == pytest.approx(1.5, abs=1e-8)
    assert bin_search_edge(2, linear(), 9, 1e-8) == pytest.approx(3, abs=1e-8)
    assert bin_search_edge(1, linear(1, 5), 5, 1e-8) == pytest.approx(0, abs=1e-8)


def test_bin_search_below_free_flow_cost():
    with pytest.raises(PreconditionError):
        bin_search_edge(2, linear(1, 5), 9, 1e-8)


@given(
    st.integers(1, 6),
    st.fractions(0, 5, max_denominator=20),
    st.fractions(Fraction(1, 10), 5, max_denominator=20),
    st.fractions(0, 3, max_denominator=20),
    st.floats(0, 50),
    st.sampled_from([1e-6, 1e-9, 1e-12]),
)
def test_bin_search_within_delta(k, c0, c1, c2, extra, delta):
    fn = CostFunction.polynomial(c0, c1, c2)
    target = k * float(c0) + extra
    x = bin_search_edge(k, fn, target, delta)
    assert abs(x - closed_form_root(k, float(c0), float(c1), float(c2), target)) <= delta + 1e-12 * max(1, x)


def test_bin_search_high_precision():
    x = bin_search_edge(1, linear(), 3, 1e-40, precision="high")
    assert abs(x - 1.5) < 1e-39


# -- redistrib ------------------------------------------------------------------


def test_redistrib_examples():
    assert redistrib(5, 5, [3, 2]) == [3, 2]
    assert redistrib(5, 6, [3, 2]) == [4, 2]
    assert redistrib(5, 4, [3, 2]) == [2, 2]


def test_redistrib_rejects_negative():
    with pytest.raises(PreconditionError):
        redistrib(1, 1, [2, -1])


vectors = st.lists(st.fractions(0, 10, max_denominator=50), min_size=1, max_size=8)


@given(vectors, st.fractions(0, 40, max_denominator=50))
def test_redistrib_exact_postconditions(vals, target):
    total = sum(vals, Fraction(0))
    out = redistrib(total, target, vals)
    assert sum(out) == target
    assert all(o >= 0 for o in out)
    assert all(abs(o - v) <= abs(total - target) for o, v in zip(out, vals))


@given(st.lists(st.floats(0, 10), min_size=1, max_size=8), st.floats(0, 40))
def test_redistrib_float_sums(vals, target):
    out = redistrib(float(sum(vals)), target, vals)
    assert min(out) >= 0
    assert sum(out) == pytest.approx(target, rel=1e-12, abs=1e-12)


# -- graphflow ------------------------------------------------------------------


def test_graphflow_single_player():
    res = graphflow(Instance((linear(),), (1,)), [3], 1e-12)
    assert res.flow.flow[0, 0] == pytest.approx(1.5)
    assert res.demands[0] == pytest.approx(1.5)


def test_graphflow_two_players_one_edge():
    res = graphflow(Instance((linear(),), (1, 1)), [5, 4], 1e-12)
    np.testing.assert_allclose(res.flow.flow[:, 0], [2, 1])
    assert res.supports == ((0, 1),)


def test_graphflow_skips_expensive_edge():
    res = graphflow(Instance((linear(1, 1),), (1,)), [0.5], 1e-12)
    assert res.demands[0] == 0 and res.supports == ((),)


def test_graphflow_reports_original_order():
    inst = Instance((linear(), linear(2, 1)), (1, 1, 1))
    a = graphflow(inst, [2.0, 4.0, 3.0], 1e-12)
    b = graphflow(inst, [4.0, 3.0, 2.0], 1e-12)
    np.testing.assert_allclose(a.flow.flow[[1, 2, 0]], b.flow.flow)


def test_graphflow_high_precision_agrees():
    inst = Instance((linear(), linear(2, 1)), (2, 1))
    lo = graphflow(inst, [4.0, 3.0], 1e-12)
    hi = graphflow(inst, [4, 3], 1e-40, precision="high")
    np.testing.assert_allclose(hi.flow.as_float().flow, lo.flow.flow, atol=1e-10)


def test_random_pairs_satisfy_contracts():
    for inst, M, delta, lam, rng in random_pairs(150, seed=11):
        assert all_contracts(inst, M, delta, lam, rng) == []


# -- fixup_negative ---------------------------------------------------------------


def _result(rows):
    f = np.array(rows, dtype=float)
    return GraphFlowResult(FlowProfile(f), f.sum(axis=1), ((0, 1, 2),), 1e-9, f.sum(axis=0), np.zeros(len(rows)))


def test_fixup_identity():
    inst = Instance((linear(),), (1, 1, 1))
    res = _result([[0.5], [0.2], [0.0]])
    np.testing.assert_array_equal(fixup_negative(res, inst, 1e-9).flow.flow, res.flow.flow)


def test_fixup_two_players():
    inst = Instance((linear(),), (1, 1))
    out = fixup_negative(_result([[-1e-9], [1 + 1e-9]]), inst, 1e-9).flow.flow
    np.testing.assert_allclose(out[:, 0], [0, 1], atol=1e-16)


def test_fixup_proportional():
    inst = Instance((linear(),), (1, 1, 1))
    a, p, q = 1e-9, 0.3, 0.6
    out = fixup_negative(_result([[-a], [p], [q]]), inst, 1e-9).flow.flow[:, 0]
    np.testing.assert_allclose(out, [0, p - a * p / (p + q), q - a * q / (p + q)], rtol=1e-15)
    assert out.sum() == pytest.approx(p + q - a, rel=1e-15)


def test_fixup_rejects_large_negative():
    inst = Instance((linear(),), (1, 1))
    with pytest.raises(InvariantError):
        fixup_negative(_result([[-0.5], [1.5]]), inst, 1e-15)
