"""Finite-precision GraphFlow: marginal costs in, (flow, demands) out.

For each edge the players are admitted in decreasing order of marginal cost;
the edge total solves ``|S| l(x) + x l'(x) = sum_{i in S} M_i`` by bisection
and each admitted player's share follows from its own marginal-cost equation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .arith import Arithmetic, get_arithmetic
from .costfn import CostFunction
from .instance import FlowProfile, Instance

__all__ = [
    "GraphFlowResult",
    "InvariantError",
    "PreconditionError",
    "bin_search_edge",
    "fixup_negative",
    "graphflow",
    "redistrib",
]


class PreconditionError(ValueError):
    pass


class InvariantError(AssertionError):
    """An internal error bound was exceeded (indicates a precision-budget bug)."""


@dataclass(frozen=True)
class GraphFlowResult:
    flow: FlowProfile
    demands: np.ndarray
    supports: tuple[tuple[int, ...], ...]
    delta_used: float
    edge_totals_hat: np.ndarray
    marginals: np.ndarray


class Prepared:
    """Cost tables and scratch buffers for repeated kernel calls on one instance."""

    def __init__(self, instance: Instance, precision="standard"):
        self.instance = instance
        self.arith: Arithmetic = get_arithmetic(precision)
        a = self.arith
        n, m = instance.n, instance.m
        with a.context():
            self.coef, self.bps, self.npieces = a.tables(instance.edges)
            self.psi = a.scalar(instance.psi.psi)
            self.v = a.array(instance.demands)
            self.f = a.zeros((n, m))
            self.w = a.zeros(n)
            self.xhat = a.zeros(m)
            self.vals = a.zeros(n)
            self.red = a.zeros(n)
        self.ssize = np.zeros(m, dtype=np.int64)
        self.order = np.zeros(n, dtype=np.int64)

    @property
    def k(self):
        return self.arith.kernels

    def run(self, M: np.ndarray, delta) -> GraphFlowResult:
        a = self.arith
        with a.context():
            Mv = a.array(M)
            d = a.scalar(delta)
            self.k.graphflow(self.coef, self.bps, self.npieces, Mv, d, self.psi,
                             self.f, self.w, self.xhat, self.ssize, self.order, self.vals, self.red)
            return self.snapshot(Mv, delta)

    def snapshot(self, M: np.ndarray, delta) -> GraphFlowResult:
        supports = tuple(
            tuple(sorted(int(i) for i in self.order[: self.ssize[e]])) for e in range(self.instance.m)
        )
        return GraphFlowResult(
            flow=FlowProfile(self.f.copy()),
            demands=self.w.copy(),
            supports=supports,
            delta_used=float(delta),
            edge_totals_hat=self.xhat.copy(),
            marginals=np.array(M, copy=True),
        )


def bin_search_edge(k: int, edge: CostFunction, target, delta, psi=None, precision="standard"):
    """Approximate root ``x`` of ``k l(x) + x l'(x) = target`` within ``delta``.

    ``psi`` defaults to ``max(1, 1/l'(0))``, which is enough for both the
    initial bracket ``[0, target*psi]`` and the early-exit residual test.
    """
    if k < 1:
        raise PreconditionError("k must be a positive integer")
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    a = get_arithmetic(precision)
    with a.context():
        l0 = edge.eval(a.scalar(0))
        if a.scalar(target) < k * l0:
            raise PreconditionError(
                f"target {target} is below k*l(0) = {float(k * l0)}; the edge carries no flow"
            )
        if psi is None:
            psi = max(1.0, 1.0 / float(edge.eval_d1(0.0)))
        coef, bps, npieces = a.tables([edge])
        return a.kernels.bin_search(k, coef, bps, npieces, 0, a.scalar(target), a.scalar(delta), a.scalar(psi))


def redistrib(total, target_total, values: Sequence):
    """Nonnegative vector summing to ``target_total``, each entry within ``|total - target_total|``.

    Works in the arithmetic of its inputs: Fractions give exact results.
    """
    vals = list(values)
    if not vals:
        raise PreconditionError("values must be nonempty")
    if any(x < 0 for x in vals) or target_total < 0 or total < 0:
        raise PreconditionError("redistrib needs nonnegative inputs")
    s = sum(vals[1:], vals[0])
    if abs(s - total) > 1e-12 * max(abs(total), 1):
        raise PreconditionError(f"values sum to {s}, not total {total}")
    exact = all(isinstance(x, (Fraction, int)) for x in vals + [total, target_total])
    if exact:
        arr = np.array([Fraction(x) for x in vals], dtype=object)
        out = np.empty(len(vals), dtype=object)
        _kernels.redistrib_into(Fraction(total), Fraction(target_total), arr, len(vals), out)
        return list(out)
    if any(isinstance(x, np.ndarray) for x in vals):
        raise PreconditionError("values must be scalars")
    arr = np.array(vals, dtype=object if any(type(x).__module__.startswith("mpmath") for x in vals) else float)
    out = np.empty_like(arr)
    _kernels.redistrib_into(total, target_total, arr, len(vals), out)
    return list(out)


def graphflow(instance: Instance, M: Sequence, delta, precision="standard") -> GraphFlowResult:
    """GraphFlow at precision ``delta`` (flows may carry tiny negative entries)."""
    M = list(M)
    if len(M) != instance.n:
        raise PreconditionError(f"expected {instance.n} marginal costs, got {len(M)}")
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if any(x < 0 for x in M):
        raise PreconditionError("marginal costs must be nonnegative")
    return Prepared(instance, precision).run(np.array(M, dtype=object if precision == "high" else float), delta)


def negative_flow_bound(instance: Instance, delta, result: GraphFlowResult) -> float:
    """Largest admissible magnitude of a negative GraphFlow entry."""
    n, psi = instance.n, instance.psi.psi
    scale = max(1.0, float(np.max(np.abs(result.flow.as_float().flow))))
    floor = 1e-12 if result.flow.flow.dtype != object else 1e-40
    return 4 * n * psi ** 5 * float(delta) + floor * psi * scale


def fixup_negative(result: GraphFlowResult, instance: Instance, delta) -> GraphFlowResult:
    """Zero out negative entries, taking the deficit proportionally from positive flows on the edge."""
    f = result.flow.flow.copy()
    bound = negative_flow_bound(instance, delta, result)
    for e in range(f.shape[1]):
        col = f[:, e]
        neg = [i for i in range(len(col)) if col[i] < 0]
        if not neg:
            continue
        worst = min(float(col[i]) for i in neg)
        if -worst > bound:
            raise InvariantError(
                f"edge {e}: negative flow {worst} exceeds the bound {bound}; delta budget violated"
            )
        deficit = -sum(col[i] for i in neg)
        pos = [i for i in range(len(col)) if col[i] > 0]
        mass = sum(col[i] for i in pos) if pos else 0
        for i in neg:
            col[i] = col[i] * 0
        if not pos or mass <= deficit:
            for i in pos:
                col[i] = col[i] * 0
            continue
        for i in pos:
            col[i] = col[i] - deficit * (col[i] / mass)
            if col[i] < 0:
                col[i] = col[i] * 0
    return GraphFlowResult(
        flow=FlowProfile(f),
        demands=f.sum(axis=1),
        supports=result.supports,
        delta_used=result.delta_used,
        edge_totals_hat=result.edge_totals_hat,
        marginals=result.marginals,
    )
