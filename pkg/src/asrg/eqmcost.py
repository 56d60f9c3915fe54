"""Players-exponential solver.

A nested bisection over each player's marginal cost.  Probing a candidate
vector runs GraphFlow; the demand it implies for the player at the current
depth is monotone in that player's marginal once all deeper players have been
re-solved, which is what makes the nesting sound.  The last GraphFlow output
is cleaned of negative dust and shifted onto the exact demands.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .arith import PrecisionError, get_arithmetic
from .graphflow import GraphFlowResult, InvariantError, Prepared, fixup_negative
from .instance import FlowProfile, Instance
from .verify import EquilibriumReport, check, marginal_matrix

__all__ = [
    "LOG_CAPACITY",
    "NestedSearchResult",
    "SolveResult",
    "band_widths",
    "choose_delta",
    "compute_lambda",
    "demand_shift",
    "eqmcost",
    "nested_search",
    "solve_players_exp",
]

LOG_CAPACITY = 1 << 18


@dataclass(frozen=True)
class ProbeLog:
    """One row per acceptance test: which search call, its depth, the probe and the resulting demand."""

    call: np.ndarray
    depth: np.ndarray
    mid: np.ndarray
    value: np.ndarray
    truncated: bool


@dataclass(frozen=True)
class NestedSearchResult:
    marginals: np.ndarray
    graphflow: GraphFlowResult
    iterations: np.ndarray
    calls: np.ndarray
    probes: int
    log: ProbeLog
    bands: np.ndarray
    lam: float


@dataclass(frozen=True)
class SolveResult:
    flow: FlowProfile
    marginals: np.ndarray
    epsilon_certified: float
    delta_used: float
    iterations: np.ndarray
    wall_time: float
    probes: int
    psi: float
    lam: float
    report: EquilibriumReport
    algorithm: str = "players-exp"
    extra: dict = field(default_factory=dict)


def compute_lambda(instance: Instance, precision="standard"):
    """Per-player marginal cost of the symmetric game with ``n`` players of demand ``V``."""
    a = get_arithmetic(precision)
    n, m = instance.n, instance.m
    with a.context():
        prep = Prepared(instance, a)
        V = a.scalar(instance.total_demand)
        nV = n * V
        k = prep.k
        psi = prep.psi
        tol = a.scalar(1e-12) * nV * psi if a.name == "standard" else nV * psi * a.scalar(10) ** (-(a.dps - 12))
        inner = nV * (a.scalar(1e-17) if a.name == "standard" else a.scalar(10) ** (-a.dps))
        upper = None
        for e in range(m):
            val, slope = k.cost_d(prep.coef, prep.bps, prep.npieces, e, nV)
            cand = val + V * slope
            upper = cand if upper is None or cand > upper else upper

        def total(lam):
            s = nV * 0
            for e in range(m):
                l0, _ = k.cost_d(prep.coef, prep.bps, prep.npieces, e, nV * 0)
                if l0 >= lam:
                    continue
                s = s + k.bin_search(n, prep.coef, prep.bps, prep.npieces, e, n * lam, inner, psi)
            return s

        lo, hi = upper * 0, upper
        while True:
            mid = (lo + hi) / 2
            if not (lo < mid < hi):
                return hi
            s = total(mid)
            if abs(s - nV) <= tol:
                return mid
            if s < nV:
                lo = mid
            else:
                hi = mid


def band_widths(n_levels: int, n: int, m: int, psi, delta, delta1) -> np.ndarray:
    """Acceptance band per search depth; the outermost depth gets the widest."""
    base = 6.0 * m * n * n * float(psi) ** 5 * (float(delta) + float(delta1))
    return np.array([2.0 ** (n_levels - 1 - t) * base for t in range(n_levels)])


def choose_delta(epsilon: float, n_levels: int, n: int, m: int, psi: float) -> float:
    """Bisection precision whose accumulated error stays within half of ``epsilon``."""
    return epsilon / (2.0 ** (n_levels + 6) * m * m * n * n * psi ** 6)


def nested_search(prep: Prepared, gstart, t0: int, M0, lam, delta, delta1, bands,
                  log_capacity: int = LOG_CAPACITY) -> NestedSearchResult:
    """Run the grouped nested bisection from depth ``t0`` on a prepared instance.

    ``gstart`` lists group boundaries (``[0, 1, ..., n]`` for one player per
    group).  Entries of ``M0`` before group ``t0`` are held fixed.
    """
    a = prep.arith
    gstart = np.asarray(gstart, dtype=np.int64)
    T = len(gstart) - 1
    with a.context():
        M = a.array(M0)
        lamv, d, d1 = a.scalar(lam), a.scalar(delta), a.scalar(delta1)
        bandv = a.array(bands)
        lo, hi, mid = a.zeros(T), a.zeros(T), a.zeros(T)
        log_mid, log_gv = a.zeros(log_capacity), a.zeros(log_capacity)
        iters = np.zeros(T, dtype=np.int64)
        iters_max = np.zeros(T, dtype=np.int64)
        calls = np.zeros(T, dtype=np.int64)
        call_of = np.zeros(T, dtype=np.int64)
        counters = np.zeros(3, dtype=np.int64)
        log_call = np.zeros(log_capacity, dtype=np.int64)
        log_depth = np.zeros(log_capacity, dtype=np.int64)
        prep.k.nested_search(
            prep.coef, prep.bps, prep.npieces, prep.v, gstart, t0, M, lamv, d, d1, prep.psi, bandv,
            lo, hi, mid, iters, iters_max, calls, call_of, counters,
            log_call, log_depth, log_mid, log_gv,
            prep.f, prep.w, prep.xhat, prep.ssize, prep.order, prep.vals, prep.red,
        )
        used = int(counters[1])
        log = ProbeLog(
            call=log_call[:used].copy(),
            depth=log_depth[:used].copy(),
            mid=log_mid[:used].copy(),
            value=log_gv[:used].copy(),
            truncated=used >= log_capacity,
        )
        return NestedSearchResult(
            marginals=M.copy(),
            graphflow=prep.snapshot(M, delta),
            iterations=iters_max,
            calls=calls,
            probes=int(counters[0]),
            log=log,
            bands=np.asarray(bands, dtype=float),
            lam=float(lam),
        )


def eqmcost(instance: Instance, k: int, prefix, delta, delta1, lam=None,
            precision="standard") -> NestedSearchResult:
    """Marginals of players ``k..n-1`` (0-based) given fixed marginals ``prefix`` for players before ``k``.

    The result's ``marginals`` field holds the full vector; entries from ``k``
    on are the ones searched.
    """
    n = instance.n
    if not 0 <= k < n:
        raise ValueError(f"k must be in [0, {n})")
    prefix = list(prefix)
    if len(prefix) != k:
        raise ValueError(f"prefix must hold the {k} marginals of players before k")
    if delta <= 0 or delta1 <= 0:
        raise ValueError("delta and delta1 must be positive")
    prep = Prepared(instance, precision)
    if lam is None:
        lam = compute_lambda(instance, prep.arith)
    if any(x < 0 or x > lam for x in prefix):
        raise ValueError("prefix marginals must lie in [0, lambda]")
    bands = band_widths(n, n, instance.m, instance.psi.psi, delta, delta1)
    M0 = prefix + [0] * (n - k)
    return nested_search(prep, np.arange(n + 1), k, M0, lam, delta, delta1, bands)


def demand_shift(flow: FlowProfile, instance: Instance, epsilon_in: float, nu: float | None = None):
    """Move a near-equilibrium flow onto the exact demands.

    A player short of its demand gets the difference on its cheapest edge;
    a player over it has all its flows scaled down proportionally.  Returns
    ``(flow, bound)`` where ``bound`` is the equilibrium gap guaranteed for the
    result given an ``epsilon_in``-equilibrium input.
    """
    f = flow.as_float().flow.copy()
    if np.any(f < 0):
        raise ValueError("demand_shift needs a nonnegative flow")
    v = instance.demand_array
    w = f.sum(axis=1)
    dev = float(np.max(np.abs(w - v)))
    if nu is not None and dev > nu:
        raise InvariantError(f"demand deviation {dev} exceeds the declared budget {nu}")
    nu = dev if nu is None else nu
    cheapest = marginal_matrix(instance, f).argmin(axis=1)
    for i in range(instance.n):
        if w[i] == v[i]:
            continue
        if w[i] < v[i]:
            f[i, cheapest[i]] += v[i] - w[i]
        else:
            f[i] *= v[i] / w[i]
        r = v[i] - f[i].sum()
        if r != 0:
            j = int(np.argmax(f[i]))
            f[i, j] = max(0.0, f[i, j] + r)
    psi = instance.psi.psi
    return FlowProfile(f), float(epsilon_in) + 6 * instance.m * nu * psi ** 2


def _resolution_guard(arith, bands, instance):
    floor = arith.resolution * max(1.0, float(instance.total_demand))
    if float(np.min(bands)) < floor:
        raise PrecisionError(
            f"requested accuracy needs demand resolution {float(np.min(bands)):.3e}, "
            f"below what {arith.name} arithmetic resolves ({floor:.1e}); rerun with precision='high'"
        )


def _certify(instance, flow, epsilon, arith):
    report = check(instance, flow, epsilon)
    if not report.passed:
        hint = "; rerun with precision='high'" if arith.name == "standard" else ""
        raise PrecisionError(f"final equilibrium gap {report.max_gap:.3e} exceeds epsilon {epsilon:.3e}{hint}")
    return report


def finish(instance: Instance, gf: GraphFlowResult, delta, epsilon, arith) -> tuple[FlowProfile, EquilibriumReport]:
    """Negative-flow fixup, demand shift and final certification."""
    fixed = fixup_negative(gf, instance, delta)
    flow, _ = demand_shift(fixed.flow, instance, epsilon)
    return flow, _certify(instance, flow, epsilon, arith)


def solve_players_exp(instance: Instance, epsilon: float, precision="standard") -> SolveResult:
    """epsilon-equilibrium flow by nested search over all players' marginal costs."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t_start = time.perf_counter()
    arith = get_arithmetic(precision)
    n, m = instance.n, instance.m
    psi = instance.psi.psi
    delta = choose_delta(epsilon, n, n, m, psi)
    bands = band_widths(n, n, m, psi, delta, delta)
    _resolution_guard(arith, bands, instance)
    prep = Prepared(instance, arith)
    lam = compute_lambda(instance, arith)
    res = nested_search(prep, np.arange(n + 1), 0, [0] * n, lam, delta, delta, bands)
    flow, report = finish(instance, res.graphflow, delta, epsilon, arith)
    return SolveResult(
        flow=flow,
        marginals=np.array([float(x) for x in res.marginals]),
        epsilon_certified=float(epsilon),
        delta_used=float(delta),
        iterations=res.iterations,
        wall_time=time.perf_counter() - t_start,
        probes=res.probes,
        psi=float(psi),
        lam=float(lam),
        report=report,
        extra={"search": res},
    )
