"""Parallel-link game instances, flow profiles, file I/O and random generation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .costfn import (
    CostFunction,
    MalformedCostFunction,
    SmoothnessBound,
    compute_psi,
    format_rational,
    parse_rational,
    validate,
)

__all__ = [
    "FlowFile",
    "FlowProfile",
    "Instance",
    "InstanceError",
    "FAMILIES",
    "generate",
    "load",
    "load_flow",
    "save",
    "save_flow",
]

FAMILIES = ("affine", "quadratic", "mixed-piecewise")
ALGORITHMS = ("players-exp", "edges-exp")


class InstanceError(ValueError):
    """Semantic or syntactic problem with an instance or flow file."""


@dataclass(frozen=True, eq=False)
class Instance:
    """``m`` parallel s-t links with cost functions and ``n`` players' demands.

    Demands must be strictly positive and sorted nonincreasing.  Every edge is
    validated on ``[0, n*V]``, the range the solvers evaluate costs over.
    """

    edges: tuple[CostFunction, ...]
    demands: tuple[Fraction, ...]

    def __post_init__(self):
        edges = tuple(self.edges)
        demands = tuple(parse_rational(d) if isinstance(d, str) else Fraction(d) for d in self.demands)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "demands", demands)
        if not edges:
            raise InstanceError("instance needs at least one edge")
        if not demands:
            raise InstanceError("instance needs at least one player")
        for i, d in enumerate(demands):
            if d <= 0:
                raise InstanceError(f"demands[{i}] = {d}: demands must be strictly positive")
        for i in range(1, len(demands)):
            if demands[i] > demands[i - 1]:
                raise InstanceError(
                    f"demands must be sorted nonincreasing: demands[{i - 1}] = {demands[i - 1]} "
                    f"< demands[{i}] = {demands[i]}"
                )
        cap = self.domain_cap
        for e, fn in enumerate(edges):
            report = validate(fn, cap)
            if not report.ok:
                raise InstanceError(f"edges[{e}] invalid on [0, {float(cap)}]: {report}")

    @classmethod
    def from_unsorted(cls, edges: Sequence[CostFunction], demands: Sequence) -> tuple["Instance", np.ndarray]:
        """Stable-sort demands descending; return the instance and the permutation used."""
        ds = [Fraction(d) if not isinstance(d, str) else parse_rational(d) for d in demands]
        order = sorted(range(len(ds)), key=lambda i: ds[i], reverse=True)
        return cls(tuple(edges), tuple(ds[i] for i in order)), np.array(order)

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and self.edges == other.edges and self.demands == other.demands

    def __hash__(self) -> int:
        return hash((self.edges, self.demands))

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, m={self.m}, demands={[format_rational(d) for d in self.demands]})"

    @property
    def n(self) -> int:
        return len(self.demands)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def total_demand(self) -> Fraction:
        return sum(self.demands, Fraction(0))

    @property
    def domain_cap(self) -> Fraction:
        return self.n * self.total_demand

    @cached_property
    def psi(self) -> SmoothnessBound:
        return compute_psi(self.edges, self.domain_cap)

    @cached_property
    def demand_array(self) -> np.ndarray:
        return np.array([float(d) for d in self.demands])

    def with_demands(self, demands: Sequence) -> "Instance":
        return Instance(self.edges, tuple(demands))

    def to_dict(self) -> dict:
        return {
            "edges": [fn.to_dict() for fn in self.edges],
            "demands": [format_rational(d) for d in self.demands],
        }

    @classmethod
    def from_dict(cls, data) -> "Instance":
        if not isinstance(data, dict):
            raise InstanceError("instance: expected a JSON object")
        for key in ("edges", "demands"):
            if key not in data:
                raise InstanceError(f"instance: missing field '{key}'")
        if not isinstance(data["edges"], list) or not isinstance(data["demands"], list):
            raise InstanceError("instance: 'edges' and 'demands' must be lists")
        try:
            edges = tuple(CostFunction.from_dict(e, f"edges[{i}]") for i, e in enumerate(data["edges"]))
            demands = tuple(parse_rational(d, f"demands[{i}]") for i, d in enumerate(data["demands"]))
        except (ValueError, MalformedCostFunction) as exc:
            raise InstanceError(str(exc)) from None
        return cls(edges, demands)


@dataclass(frozen=True, eq=False)
class FlowProfile:
    """Per-player per-edge flows; row ``i`` is player ``i``, column ``e`` is edge ``e``.

    Totals are always derived from the matrix, never stored separately.
    """

    flow: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.flow)
        if arr.dtype != object:
            arr = arr.astype(float)
        if arr.ndim != 2:
            raise ValueError(f"flow must be a (players, edges) matrix, got shape {arr.shape}")
        object.__setattr__(self, "flow", arr)

    @property
    def n(self) -> int:
        return self.flow.shape[0]

    @property
    def m(self) -> int:
        return self.flow.shape[1]

    @property
    def edge_totals(self) -> np.ndarray:
        return self.flow.sum(axis=0)

    @property
    def player_totals(self) -> np.ndarray:
        return self.flow.sum(axis=1)

    def as_float(self) -> "FlowProfile":
        if self.flow.dtype == object:
            return FlowProfile(np.array([[float(x) for x in row] for row in self.flow]))
        return self

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.as_float().flow >= 0))

    def permuted(self, order: Sequence[int]) -> "FlowProfile":
        return FlowProfile(self.flow[np.asarray(order)])


@dataclass(frozen=True)
class FlowFile:
    flow: FlowProfile
    epsilon: float
    algorithm: str
    extra: dict = field(default_factory=dict)


# -- file I/O -----------------------------------------------------------------


def _read_json(path) -> object:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load(path) -> Instance:
    data = _read_json(path)
    try:
        return Instance.from_dict(data)
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None


def save(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2) + "\n")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def save_flow(flow: FlowProfile, path, epsilon: float, algorithm: str, **extra) -> None:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    payload = {
        "flow": [[_fmt(x) for x in row] for row in flow.flow],
        "epsilon": _fmt(epsilon),
        "algorithm": algorithm,
    }
    payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_flow(path) -> FlowFile:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: expected a JSON object")
    for key in ("flow", "epsilon", "algorithm"):
        if key not in data:
            raise InstanceError(f"{path}: missing field '{key}'")
    rows = data["flow"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InstanceError(f"{path}: 'flow' must be a nonempty list of rows")
    width = len(rows[0])
    matrix = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InstanceError(f"{path}: flow[{i}] has {len(row)} entries, expected {width}")
        for e, x in enumerate(row):
            try:
                matrix[i, e] = float(x)
            except (TypeError, ValueError):
                raise InstanceError(f"{path}: flow[{i}][{e}]: not a decimal number: {x!r}") from None
            if not np.isfinite(matrix[i, e]) or matrix[i, e] < 0:
                raise InstanceError(f"{path}: flow[{i}][{e}] = {x}: flows must be finite and nonnegative")
    try:
        eps = float(data["epsilon"])
    except (TypeError, ValueError):
        raise InstanceError(f"{path}: epsilon: not a decimal number: {data['epsilon']!r}") from None
    if data["algorithm"] not in ALGORITHMS:
        raise InstanceError(f"{path}: algorithm must be one of {ALGORITHMS}, got {data['algorithm']!r}")
    extra = {k: v for k, v in data.items() if k not in ("flow", "epsilon", "algorithm")}
    return FlowFile(FlowProfile(matrix), eps, data["algorithm"], extra)


# -- generation ---------------------------------------------------------------


def _shift_poly(coeffs_u: Sequence[Fraction], t: Fraction) -> list[Fraction]:
    """Coefficients in ``x`` of ``sum_k c_k (x - t)^k``."""
    out = [Fraction(0)] * 4
    binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
    for k, c in enumerate(coeffs_u):
        for j in range(k + 1):
            out[j] += c * binom[k][j] * (-t) ** (k - j)
    return out


def _draw(rng, lo: int, hi: int, den: int) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), den)


def _affine(rng) -> list[tuple[Fraction, list[Fraction]]]:
    return [(Fraction(0), [_draw(rng, 0, 20, 10), _draw(rng, 2, 40, 20)])]


def _quadratic(rng) -> list[tuple[Fraction, list[Fraction]]]:
    return [(Fraction(0), [_draw(rng, 0, 20, 10), _draw(rng, 2, 40, 20), _draw(rng, 1, 20, 40)])]


def _piecewise(rng, span: Fraction) -> list[tuple[Fraction, list[Fraction]]]:
    """Affine start glued C1 to a quadratic, optionally followed by a cubic tail."""
    b, a = _draw(rng, 0, 20, 10), _draw(rng, 2, 40, 20)
    t1 = max(Fraction(1, 10), Fraction(int(rng.integers(1, 10)), 10) * span)
    c = _draw(rng, 1, 20, 40)
    pieces = [(Fraction(0), [b, a])]
    # value, slope and half-curvature at t1, expressed in u = x - t1
    v1, s1 = b + a * t1, a
    pieces.append((t1, _shift_poly([v1, s1, c], t1)))
    if rng.integers(0, 2):
        t2 = t1 + max(Fraction(1, 10), Fraction(int(rng.integers(1, 10)), 10) * span)
        u = t2 - t1
        v2, s2, h2 = v1 + s1 * u + c * u * u, s1 + 2 * c * u, c
        d = _draw(rng, 1, 10, 100)
        pieces.append((t2, _shift_poly([v2, s2, h2, d], t2)))
    return pieces


def generate(seed: int, n: int, m: int, family: str = "affine") -> Instance:
    """Random valid instance; identical output for identical arguments.

    Demands are multiples of 1/20 in [0.2, 1], sorted descending.  Slopes are
    at least 0.1 everywhere on the domain.
    """
    if not 1 <= n <= 8 or not 1 <= m <= 8:
        raise ValueError("generate supports 1 <= n, m <= 8")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    rng = np.random.default_rng([seed, n, m, FAMILIES.index(family)])
    demands = sorted((_draw(rng, 4, 20, 20) for _ in range(n)), reverse=True)
    span = sum(demands, Fraction(0))
    edges = []
    for _ in range(m):
        if family == "affine":
            pieces = _affine(rng)
        elif family == "quadratic":
            pieces = _quadratic(rng)
        else:
            kind = int(rng.integers(0, 3))
            pieces = (_affine, _quadratic, lambda r: _piecewise(r, span))[kind](rng)
        edges.append(CostFunction(pieces))
    return Instance(tuple(edges), tuple(demands))
