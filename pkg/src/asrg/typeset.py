"""Edges-exponential solver.

At equilibrium, players sorted by demand have nested supports, so they fall
into at most ``m`` consecutive blocks whose members use the same edges.
Replacing each block's demands by their mean leaves the equilibrium edge
totals unchanged, and with identical players inside a block the nested search
needs one dimension per block instead of one per player.  Each candidate
partition yields edge totals; per-player flows are then recovered from the
totals one player at a time, and a partition whose totals cannot be split
consistently is discarded.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb

import numpy as np

from .arith import PrecisionError, get_arithmetic
from .eqmcost import (
    NestedSearchResult,
    SolveResult,
    band_widths,
    choose_delta,
    compute_lambda,
    demand_shift,
    nested_search,
)
from .graphflow import InvariantError, Prepared, fixup_negative
from .instance import FlowProfile, Instance
from .verify import check

__all__ = [
    "DecompositionError",
    "DecompositionResult",
    "SolverFailure",
    "TypeSet",
    "build_averaged",
    "candidate_order",
    "decompose_total_flow",
    "enumerate_typesets",
    "eqmcost_typed",
    "solve_edges_exp",
    "typeset_count",
]


class DecompositionError(ValueError):
    """Edge totals could not be split into per-player equilibrium flows."""

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = residuals


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class TypeSet:
    """Players ``0..n-1`` split into ``m`` consecutive bins, some possibly empty.

    ``bin_sizes`` is the bin-and-ball view used for counting; the solver only
    sees the nonempty bins, exposed as ``groups``.
    """

    bin_sizes: tuple[int, ...]

    def __post_init__(self):
        if any(b < 0 for b in self.bin_sizes) or sum(self.bin_sizes) < 1:
            raise ValueError("bin sizes must be nonnegative with a positive total")

    @property
    def n(self) -> int:
        return sum(self.bin_sizes)

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b for b in self.bin_sizes if b)

    @property
    def T(self) -> int:
        return len(self.sizes)

    @cached_property
    def gstart(self) -> tuple[int, ...]:
        return (0,) + tuple(itertools.accumulate(self.sizes))

    @property
    def boundaries(self) -> tuple[int, ...]:
        """1-based index of each group's first player."""
        return tuple(s + 1 for s in self.gstart[:-1])

    @property
    def groups(self) -> tuple[range, ...]:
        return tuple(range(self.gstart[t], self.gstart[t + 1]) for t in range(self.T))

    @classmethod
    def singletons(cls, n: int) -> "TypeSet":
        return cls((1,) * n)

    def __str__(self) -> str:
        return "|".join(",".join(str(i + 1) for i in g) for g in self.groups)


def typeset_count(n: int, m: int) -> int:
    return comb(n + m - 1, m - 1)


def enumerate_typesets(n: int, m: int) -> list[TypeSet]:
    """All placements of ``n`` ordered players into ``m`` ordered bins, empty bins allowed.

    Ordered lexicographically by the cut positions between bins.  Distinct
    placements can induce the same partition into nonempty groups; see
    :func:`candidate_order` for the deduplicated sequence the solver uses.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    out = []
    for cuts in itertools.combinations_with_replacement(range(n + 1), m - 1):
        edges = (0,) + cuts + (n,)
        out.append(TypeSet(tuple(edges[j + 1] - edges[j] for j in range(m))))
    return out


def candidate_order(n: int, m: int) -> list[TypeSet]:
    """Distinct partitions into nonempty groups: fewest groups first, then lexicographic."""
    seen = {}
    for ts in enumerate_typesets(n, m):
        seen.setdefault(ts.sizes, TypeSet(ts.sizes))
    return sorted(seen.values(), key=lambda ts: (ts.T, ts.boundaries))


def build_averaged(instance: Instance, ts: TypeSet) -> Instance:
    """Same edges, each group's demands replaced by the group mean."""
    if ts.n != instance.n:
        raise ValueError(f"type set covers {ts.n} players, instance has {instance.n}")
    demands = []
    for g in ts.groups:
        mean = sum((instance.demands[i] for i in g), Fraction(0)) / len(g)
        demands.extend([mean] * len(g))
    assert all(demands[i] >= demands[i + 1] for i in range(len(demands) - 1))
    return Instance(instance.edges, tuple(demands))


def eqmcost_typed(instance: Instance, ts: TypeSet, delta, delta1, lam=None,
                  precision="standard") -> NestedSearchResult:
    """Nested search with one dimension per group of ``ts``.

    ``instance`` should already be averaged over ``ts``.  With all groups
    singletons this is exactly :func:`asrg.eqmcost.eqmcost` from player 0.
    """
    if ts.n != instance.n:
        raise ValueError(f"type set covers {ts.n} players, instance has {instance.n}")
    prep = Prepared(instance, precision)
    if lam is None:
        lam = compute_lambda(instance, prep.arith)
    bands = band_widths(ts.T, instance.n, instance.m, instance.psi.psi, delta, delta1)
    return nested_search(prep, np.array(ts.gstart), 0, [0] * instance.n, lam, delta, delta1, bands)


@dataclass(frozen=True)
class DecompositionResult:
    flow: FlowProfile
    per_player_marginals: np.ndarray
    residuals: np.ndarray
    tol: float


def decompose_total_flow(instance: Instance, h, tol: float) -> DecompositionResult:
    """Per-player flows whose equilibrium conditions hold against fixed edge totals ``h``.

    Player ``i`` gets ``max(0, (M_i - l(h_e)) / l'(h_e))`` on edge ``e`` with
    ``M_i`` chosen so the flows add up to its demand.  Fails if the flows do
    not add up to ``h`` on some edge within ``tol``.
    """
    h = np.asarray([float(x) for x in h])
    if h.shape != (instance.m,):
        raise ValueError(f"expected {instance.m} edge totals")
    if np.any(h < 0):
        raise ValueError("edge totals must be nonnegative")
    V = float(instance.total_demand)
    if abs(h.sum() - V) > max(tol, 1e-12 * V):
        raise DecompositionError(f"edge totals sum to {h.sum()!r}, total demand is {V!r}", np.abs(h - h))
    base = np.array([float(fn.eval(x)) for fn, x in zip(instance.edges, h)])
    slope = np.array([float(fn.eval_d1(x)) for fn, x in zip(instance.edges, h)])
    v = instance.demand_array
    f = np.zeros((instance.n, instance.m))
    marg = np.zeros(instance.n)

    def spread(mu):
        return np.maximum(0.0, (mu - base) / slope)

    for i in range(instance.n):
        lo, hi = float(base.min()), float(np.max(base + v[i] * slope))
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            if spread(mid).sum() < v[i]:
                lo = mid
            else:
                hi = mid
        mu = 0.5 * (lo + hi)
        row = spread(mu)
        s = row.sum()
        row *= v[i] / s
        assert abs(row.sum() - v[i]) <= 1e-12 * max(1.0, v[i])
        f[i], marg[i] = row, mu
    residuals = np.abs(f.sum(axis=0) - h)
    if np.any(residuals > tol):
        e = int(np.argmax(residuals))
        raise DecompositionError(
            f"edge {e}: recovered total differs from h by {residuals[e]:.3e} > tol {tol:.3e}", residuals
        )
    return DecompositionResult(FlowProfile(f), marg, residuals, tol)


@dataclass(frozen=True)
class Attempt:
    typeset: TypeSet
    accepted: bool
    reason: str
    max_residual: float
    probes: int


def solve_edges_exp(instance: Instance, epsilon: float, precision="standard") -> SolveResult:
    """epsilon-equilibrium flow by search over partitions of players into groups."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t_start = time.perf_counter()
    arith = get_arithmetic(precision)
    n, m = instance.n, instance.m
    psi = instance.psi.psi
    tol = epsilon / (4 * m * psi)
    lam = compute_lambda(instance, arith)
    attempts = []
    probes = 0
    for ts in candidate_order(n, m):
        avg = build_averaged(instance, ts)
        # stricter than the per-player budget: edge totals must land within tol
        delta = choose_delta(epsilon, ts.T, n, m, psi) / (16 * n)
        bands = band_widths(ts.T, n, m, psi, delta, delta)
        floor = arith.resolution * max(1.0, float(instance.total_demand))
        if float(bands.min()) < floor:
            raise PrecisionError(
                f"type set {ts}: demand resolution {float(bands.min()):.3e} is below {floor:.1e}; "
                "rerun with precision='high'"
            )
        res = eqmcost_typed(avg, ts, delta, delta, lam=lam, precision=arith)
        probes += res.probes
        try:
            fixed = fixup_negative(res.graphflow, avg, delta)
            shifted, _ = demand_shift(fixed.flow, avg, epsilon)
        except InvariantError as exc:
            attempts.append(Attempt(ts, False, str(exc), float("inf"), res.probes))
            continue
        try:
            dec = decompose_total_flow(instance, shifted.edge_totals, tol)
        except DecompositionError as exc:
            attempts.append(Attempt(ts, False, str(exc), float(np.max(exc.residuals)), res.probes))
            continue
        report = check(instance, dec.flow, epsilon)
        if not report.passed:
            attempts.append(
                Attempt(ts, False, f"gap {report.max_gap:.3e} > epsilon", float(dec.residuals.max()), res.probes)
            )
            continue
        attempts.append(Attempt(ts, True, "accepted", float(dec.residuals.max()), res.probes))
        return SolveResult(
            flow=dec.flow,
            marginals=dec.per_player_marginals,
            epsilon_certified=float(epsilon),
            delta_used=float(delta),
            iterations=res.iterations,
            wall_time=time.perf_counter() - t_start,
            probes=probes,
            psi=float(psi),
            lam=float(lam),
            report=report,
            algorithm="edges-exp",
            extra={"typeset": ts, "attempts": attempts, "search": res, "edge_totals": shifted.edge_totals},
        )
    best = min((a.max_residual for a in attempts), default=float("inf"))
    hint = "; rerun with precision='high'" if arith.name == "standard" else ""
    raise SolverFailure(
        f"no type set produced a certified equilibrium (best residual {best:.3e}, tol {tol:.3e}){hint}"
    )
