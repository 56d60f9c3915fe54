"""Independent checks: marginal costs, equilibrium certificates, best responses
and a brute-force KKT oracle for small instances.

Everything here works in float64 and shares no code with the solvers beyond
cost-function evaluation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .costfn import CostFunction
from .instance import FlowProfile, Instance

__all__ = [
    "EquilibriumReport",
    "OracleFailure",
    "PreconditionError",
    "best_response",
    "check",
    "marginal",
    "marginal_matrix",
    "oracle_solve",
]


class PreconditionError(ValueError):
    pass


class OracleFailure(RuntimeError):
    """No support pattern produced a certified equilibrium."""


@dataclass(frozen=True)
class EquilibriumReport:
    per_player_gap: np.ndarray
    max_gap: float
    per_player_min_marginal: np.ndarray
    passed: bool
    epsilon: float
    marginals: np.ndarray
    effective_supports: tuple[tuple[int, ...], ...]
    support_threshold: float

    def summary(self) -> str:
        lines = [f"max_gap {self.max_gap:.6e}  epsilon {self.epsilon:.6e}  {'PASS' if self.passed else 'FAIL'}"]
        for i, (g, mm) in enumerate(zip(self.per_player_gap, self.per_player_min_marginal)):
            lines.append(
                f"player {i}: gap {g:.6e}  min_marginal {mm:.12g}  effective_support {list(self.effective_supports[i])}"
            )
        return "\n".join(lines)


def marginal(edge: CostFunction, total, own) -> float:
    """``l(total) + own * l'(total)``: one player's marginal cost on an edge."""
    if own < 0 or total < 0:
        raise PreconditionError("flows must be nonnegative")
    if own > total * (1 + 1e-12) + 1e-15:
        raise PreconditionError(f"own flow {own} exceeds edge total {total}")
    return float(edge.eval(float(total))) + float(own) * float(edge.eval_d1(float(total)))


def _as_matrix(flow) -> np.ndarray:
    if isinstance(flow, FlowProfile):
        return flow.as_float().flow
    arr = np.asarray(flow)
    return FlowProfile(arr).as_float().flow


def marginal_matrix(instance: Instance, flow) -> np.ndarray:
    """``L[i, e]`` for every player and edge."""
    f = _as_matrix(flow)
    totals = f.sum(axis=0)
    L = np.empty_like(f)
    for e, fn in enumerate(instance.edges):
        t = max(float(totals[e]), 0.0)
        L[:, e] = float(fn.eval(t)) + f[:, e] * float(fn.eval_d1(t))
    return L


def check(instance: Instance, flow, epsilon: float) -> EquilibriumReport:
    """Certify that every player's flow sits on edges within ``epsilon`` of its cheapest marginal."""
    f = _as_matrix(flow)
    if f.shape != (instance.n, instance.m):
        raise PreconditionError(f"flow shape {f.shape} does not match instance ({instance.n}, {instance.m})")
    if np.any(f < 0):
        i, e = np.argwhere(f < 0)[0]
        raise PreconditionError(f"player {i} has negative flow {f[i, e]} on edge {e}")
    v = instance.demand_array
    w = f.sum(axis=1)
    for i in range(instance.n):
        if abs(w[i] - v[i]) > 1e-9 * max(v[i], 1.0):
            raise PreconditionError(f"player {i} routes {w[i]!r}, demand is {v[i]!r}")
    L = marginal_matrix(instance, f)
    mins = L.min(axis=1)
    gaps = np.zeros(instance.n)
    for i in range(instance.n):
        sup = f[i] > 0
        if sup.any():
            gaps[i] = max(0.0, float(L[i, sup].max() - mins[i]))
    thr = 10 * epsilon * instance.psi.psi
    eff = tuple(tuple(int(e) for e in np.flatnonzero(f[i] > thr)) for i in range(instance.n))
    max_gap = float(gaps.max()) if gaps.size else 0.0
    return EquilibriumReport(
        per_player_gap=gaps,
        max_gap=max_gap,
        per_player_min_marginal=mins,
        passed=max_gap <= epsilon,
        epsilon=float(epsilon),
        marginals=L,
        effective_supports=eff,
        support_threshold=thr,
    )


def _bisect(fn, lo: float, hi: float, target: float) -> float:
    """Root of increasing ``fn`` on ``[lo, hi]`` down to float resolution."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def best_response(instance: Instance, flow, player: int) -> tuple[FlowProfile, float]:
    """Optimal split for ``player`` against the others' fixed flows.

    Returns the profile with that player's row replaced and the change in the
    player's cost (negative means the player could improve).
    """
    f = _as_matrix(flow).copy()
    if not 0 <= player < instance.n:
        raise PreconditionError(f"player index {player} out of range")
    vi = float(instance.demands[player])
    g = f.sum(axis=0) - f[player]
    g = np.maximum(g, 0.0)
    edges = instance.edges

    def own_marginal(e, x):
        t = g[e] + x
        return float(edges[e].eval(t)) + x * float(edges[e].eval_d1(t))

    def split(mu):
        xs = np.zeros(instance.m)
        for e in range(instance.m):
            if own_marginal(e, 0.0) >= mu:
                continue
            if own_marginal(e, vi) <= mu:
                xs[e] = vi
            else:
                xs[e] = _bisect(lambda x, e=e: own_marginal(e, x), 0.0, vi, mu)
        return xs

    lo = min(float(edges[e].eval(g[e])) for e in range(instance.m))
    hi = max(own_marginal(e, vi) for e in range(instance.m))
    mu = _bisect(lambda u: split(u).sum(), lo, hi, vi)
    xs = split(mu)
    s = xs.sum()
    xs = xs * (vi / s) if s > 0 else xs
    before = sum(f[player, e] * float(edges[e].eval(g[e] + f[player, e])) for e in range(instance.m))
    after = sum(xs[e] * float(edges[e].eval(g[e] + xs[e])) for e in range(instance.m))
    f[player] = xs
    return FlowProfile(f), float(after - before)


# -- brute-force oracle ---------------------------------------------------------


def _poly(fn: CostFunction) -> np.ndarray:
    if len(fn.pieces) != 1:
        raise PreconditionError("oracle_solve handles single-piece polynomial costs only")
    return fn.float_table()[1][0]


def _newton(coefs, v, pattern, iters=200, damping=0.5):
    n, m = pattern.shape
    idx = [(i, e) for i in range(n) for e in range(m) if pattern[i, e]]
    nf = len(idx)
    f = np.zeros((n, m))
    for i in range(n):
        f[i, pattern[i]] = v[i] / pattern[i].sum()
    mu = np.zeros(n)

    def derivs(t):
        c = coefs
        l = ((c[:, 3] * t + c[:, 2]) * t + c[:, 1]) * t + c[:, 0]
        d1 = (3 * c[:, 3] * t + 2 * c[:, 2]) * t + c[:, 1]
        d2 = 6 * c[:, 3] * t + 2 * c[:, 2]
        return l, d1, d2

    t = f.sum(axis=0)
    l, d1, d2 = derivs(t)
    mu = np.array([(l + f[i] * d1)[pattern[i]].mean() for i in range(n)])
    for _ in range(iters):
        t = f.sum(axis=0)
        l, d1, d2 = derivs(t)
        F = np.empty(nf + n)
        J = np.zeros((nf + n, nf + n))
        for r, (i, e) in enumerate(idx):
            F[r] = l[e] + f[i, e] * d1[e] - mu[i]
            for c_, (j, e2) in enumerate(idx):
                if e2 == e:
                    J[r, c_] = d1[e] + f[i, e] * d2[e] + (d1[e] if j == i else 0.0)
            J[r, nf + i] = -1.0
        for i in range(n):
            F[nf + i] = f[i].sum() - v[i]
            for c_, (j, _) in enumerate(idx):
                if j == i:
                    J[nf + i, c_] = 1.0
        if np.max(np.abs(F)) < 1e-14:
            break
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None
        for r, (i, e) in enumerate(idx):
            f[i, e] -= damping * step[r]
        mu -= damping * step[nf:]
        if not np.all(np.isfinite(f)):
            return None
    return f


def oracle_solve(instance: Instance) -> FlowProfile:
    """Equilibrium by support enumeration and damped Newton on the KKT system.

    Limited to ``n, m <= 3`` and single-piece costs.
    """
    n, m = instance.n, instance.m
    if n > 3 or m > 3:
        raise PreconditionError("oracle_solve is limited to n <= 3 and m <= 3")
    coefs = np.array([_poly(fn) for fn in instance.edges])
    v = instance.demand_array
    rows = [np.array(bits, dtype=bool) for bits in itertools.product([True, False], repeat=m) if any(bits)]
    for combo in itertools.product(rows, repeat=n):
        pattern = np.array(combo)
        f = _newton(coefs, v, pattern)
        if f is None or np.any(f < -1e-12):
            continue
        f = np.maximum(f, 0.0)
        try:
            if check(instance, f, 1e-9).passed:
                return FlowProfile(f)
        except PreconditionError:
            continue
    raise OracleFailure("no support pattern converged to a certified equilibrium")
