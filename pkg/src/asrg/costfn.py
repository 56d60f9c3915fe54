"""Convex increasing piecewise-polynomial edge cost functions.

A :class:`CostFunction` is a list of polynomial pieces of degree at most 3.
Piece ``i`` covers the half-open interval ``[start_i, start_{i+1})`` and the
last piece extends to infinity.  Coefficients are exact rationals; evaluation
happens in whatever arithmetic the argument carries (``Fraction`` stays exact,
``mpmath.mpf`` stays multiprecision, everything else is float64).
"""
from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

__all__ = [
    "CostFunction",
    "DomainError",
    "MalformedCostFunction",
    "Piece",
    "SmoothnessBound",
    "SmoothnessError",
    "ValidationReport",
    "Violation",
    "compute_psi",
    "parse_rational",
    "format_rational",
    "validate",
]

MAX_DEGREE = 3
# smallest admissible slope anywhere on the domain
MIN_SLOPE = 1e-12

_RATIONAL_RE = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")


class MalformedCostFunction(ValueError):
    """Structural problem with a piece list (ordering, degree, emptiness)."""


class DomainError(ValueError):
    """Cost function evaluated at a negative flow."""


class SmoothnessError(ValueError):
    """No finite smoothness constant exists (slope vanishes on the domain)."""


def parse_rational(text: str | int | Fraction, where: str = "value") -> Fraction:
    """Parse a decimal-free ``"p/q"`` or ``"p"`` string into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"{where}: expected a rational string 'p/q', got {text!r}")
    try:
        return Fraction(text.replace(" ", ""))
    except ZeroDivisionError:
        raise ValueError(f"{where}: zero denominator in {text!r}") from None


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


@dataclass(frozen=True)
class Piece:
    start: Fraction
    coeffs: tuple[Fraction, Fraction, Fraction, Fraction]

    def value(self, x):
        c0, c1, c2, c3 = self.coeffs
        return ((c3 * x + c2) * x + c1) * x + c0

    def d1(self, x):
        _, c1, c2, c3 = self.coeffs
        return (3 * c3 * x + 2 * c2) * x + c1

    def d2(self, x):
        _, _, c2, c3 = self.coeffs
        return 6 * c3 * x + 2 * c2


class CostFunction:
    """Piecewise cubic cost ``l(x)`` with exact rational coefficients.

    Construct from ``(start, coeffs)`` pairs, lowest-order coefficient first::

        >>> l = CostFunction([(0, [1, 1])])        # l(x) = x + 1
        >>> l.eval(2.0)
        3.0
    """

    __slots__ = ("pieces", "_starts", "_fstarts", "_fcoef", "_mp_cache")

    def __init__(self, pieces: Iterable[tuple[object, Sequence[object]]] | Iterable[Piece]):
        built: list[Piece] = []
        for idx, item in enumerate(pieces):
            if isinstance(item, Piece):
                start, coeffs = item.start, list(item.coeffs)
            else:
                try:
                    start, coeffs = item
                except (TypeError, ValueError):
                    raise MalformedCostFunction(f"piece {idx}: expected (start, coeffs)") from None
                coeffs = list(coeffs)
            if len(coeffs) == 0:
                raise MalformedCostFunction(f"piece {idx}: no coefficients")
            if len(coeffs) > MAX_DEGREE + 1:
                extra = [_to_fraction(c) for c in coeffs[MAX_DEGREE + 1:]]
                if any(extra):
                    raise MalformedCostFunction(
                        f"piece {idx}: degree {len(coeffs) - 1} exceeds {MAX_DEGREE}"
                    )
                coeffs = coeffs[: MAX_DEGREE + 1]
            cs = [_to_fraction(c) for c in coeffs] + [Fraction(0)] * (MAX_DEGREE + 1 - len(coeffs))
            built.append(Piece(_to_fraction(start), tuple(cs)))
        if not built:
            raise MalformedCostFunction("cost function needs at least one piece")
        if built[0].start != 0:
            raise MalformedCostFunction(f"first piece must start at 0, got {built[0].start}")
        for i in range(1, len(built)):
            if built[i].start <= built[i - 1].start:
                raise MalformedCostFunction(
                    f"piece {i}: breakpoint {built[i].start} not above previous {built[i - 1].start}"
                )
        self.pieces: tuple[Piece, ...] = tuple(built)
        self._starts = [p.start for p in built]
        self._fstarts = np.array([float(s) for s in self._starts])
        self._fcoef = np.array([[float(c) for c in p.coeffs] for p in built])
        self._mp_cache = None

    @classmethod
    def polynomial(cls, *coeffs) -> "CostFunction":
        """Single-piece polynomial ``c0 + c1 x + c2 x^2 + c3 x^3``."""
        return cls([(0, coeffs)])

    def __repr__(self) -> str:
        parts = ", ".join(
            f"[{format_rational(p.start)}: {', '.join(format_rational(c) for c in p.coeffs)}]"
            for p in self.pieces
        )
        return f"CostFunction({parts})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CostFunction) and self.pieces == other.pieces

    def __hash__(self) -> int:
        return hash(self.pieces)

    @property
    def breakpoints(self) -> list[Fraction]:
        return self._starts[1:]

    @property
    def degree(self) -> int:
        deg = 0
        for p in self.pieces:
            for d in range(MAX_DEGREE, -1, -1):
                if p.coeffs[d] != 0:
                    deg = max(deg, d)
                    break
        return deg

    # -- evaluation -------------------------------------------------------

    def piece_index(self, x) -> int:
        """Index of the piece containing ``x`` (right piece at a breakpoint)."""
        if isinstance(x, (Fraction, int)):
            return bisect.bisect_right(self._starts, x) - 1
        return int(np.searchsorted(self._fstarts, float(x), side="right")) - 1

    def _check_domain(self, x):
        if isinstance(x, np.ndarray):
            if np.any(x < 0):
                raise DomainError("cost function evaluated at negative flow")
        elif x < 0:
            raise DomainError(f"cost function evaluated at negative flow {x}")

    def _mp_coeffs(self):
        prec = mpmath.mp.prec
        if self._mp_cache is None or self._mp_cache[0] != prec:
            table = [
                (mpmath.mpf(p.start.numerator) / p.start.denominator,
                 tuple(mpmath.mpf(c.numerator) / c.denominator for c in p.coeffs))
                for p in self.pieces
            ]
            self._mp_cache = (prec, table)
        return self._mp_cache[1]

    def _eval(self, x, order: int):
        self._check_domain(x)
        if isinstance(x, np.ndarray):
            xs = x.astype(float)
            idx = np.searchsorted(self._fstarts, xs, side="right") - 1
            c = self._fcoef[idx]
            if order == 0:
                return ((c[..., 3] * xs + c[..., 2]) * xs + c[..., 1]) * xs + c[..., 0]
            if order == 1:
                return (3 * c[..., 3] * xs + 2 * c[..., 2]) * xs + c[..., 1]
            return 6 * c[..., 3] * xs + 2 * c[..., 2]
        if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
            piece = self.pieces[bisect.bisect_right(self._starts, x) - 1]
            return (piece.value, piece.d1, piece.d2)[order](Fraction(x))
        if isinstance(x, mpmath.mpf):
            table = self._mp_coeffs()
            j = len(table) - 1
            while j > 0 and table[j][0] > x:
                j -= 1
            c0, c1, c2, c3 = table[j][1]
        else:
            x = float(x)
            j = int(np.searchsorted(self._fstarts, x, side="right")) - 1
            c0, c1, c2, c3 = (float(v) for v in self._fcoef[j])
        if order == 0:
            return ((c3 * x + c2) * x + c1) * x + c0
        if order == 1:
            return (3 * c3 * x + 2 * c2) * x + c1
        return 6 * c3 * x + 2 * c2

    def eval(self, x):
        """``l(x)``."""
        return self._eval(x, 0)

    def eval_d1(self, x):
        """``l'(x)``."""
        return self._eval(x, 1)

    def eval_d2(self, x):
        """``l''(x)``."""
        return self._eval(x, 2)

    __call__ = eval

    def float_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoint starts and ``(pieces, 4)`` coefficient table as float64."""
        return self._fstarts.copy(), self._fcoef.copy()

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "pieces": [
                {"start": format_rational(p.start), "coeffs": [format_rational(c) for c in p.coeffs]}
                for p in self.pieces
            ]
        }

    @classmethod
    def from_dict(cls, data: dict, where: str = "cost") -> "CostFunction":
        if not isinstance(data, dict) or "pieces" not in data:
            raise ValueError(f"{where}: expected an object with a 'pieces' list")
        pieces = data["pieces"]
        if not isinstance(pieces, list):
            raise ValueError(f"{where}.pieces: expected a list")
        parsed = []
        for i, p in enumerate(pieces):
            loc = f"{where}.pieces[{i}]"
            if not isinstance(p, dict) or "start" not in p or "coeffs" not in p:
                raise ValueError(f"{loc}: expected {{'start': ..., 'coeffs': [...]}}")
            if not isinstance(p["coeffs"], list):
                raise ValueError(f"{loc}.coeffs: expected a list")
            start = parse_rational(p["start"], f"{loc}.start")
            coeffs = [parse_rational(c, f"{loc}.coeffs[{j}]") for j, c in enumerate(p["coeffs"])]
            parsed.append((start, coeffs))
        try:
            return cls(parsed)
        except MalformedCostFunction as exc:
            raise MalformedCostFunction(f"{where}: {exc}") from None


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # value-continuity | slope-continuity | convexity | monotonicity | negativity
    location: tuple[float, float]
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.kind} at {v.location}: {v.detail}" for v in self.violations)


def _piece_spans(fn: CostFunction, cap: Fraction):
    """Yield ``(piece, a, b)`` for each piece's intersection with ``[0, cap]``."""
    pieces = fn.pieces
    for i, p in enumerate(pieces):
        if p.start > cap:
            break
        end = pieces[i + 1].start if i + 1 < len(pieces) else None
        b = cap if end is None or end > cap else end
        yield p, p.start, b


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of ``a x^2 + b x + c``."""
    if a == 0:
        return [] if b == 0 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    s = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(s, b))
    roots = [q / a] if q != 0 else [0.0]
    if q != 0:
        roots.append(c / q)
    return roots


def _slope_min(p: Piece, a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
    """Exact minimum of ``l'`` over ``[a, b]`` and where it is attained."""
    _, c1, c2, c3 = p.coeffs
    cands = [a, b]
    if c3 != 0:
        vertex = -c2 / (3 * c3)
        if a < vertex < b:
            cands.append(vertex)
    vals = [(p.d1(x), x) for x in cands]
    return min(vals)


def validate(fn: CostFunction, cap, tol: float = 1e-12) -> ValidationReport:
    """Check C1 gluing, convexity, strict monotonicity and nonnegativity on ``[0, cap]``.

    Continuity is compared exactly; a gap is reported when it exceeds ``tol``
    relative to the magnitude of the values being glued (``tol=0`` demands
    exact equality).
    """
    cap = _to_fraction(cap)
    report = ValidationReport()
    pieces = fn.pieces
    for i in range(1, len(pieces)):
        b = pieces[i].start
        left, right = pieces[i - 1], pieces[i]
        for kind, lv, rv in (
            ("value-continuity", left.value(b), right.value(b)),
            ("slope-continuity", left.d1(b), right.d1(b)),
        ):
            gap = abs(lv - rv)
            scale = max(abs(lv), abs(rv), Fraction(1))
            if gap > Fraction(tol) * scale:
                report.violations.append(
                    Violation(kind, (float(b), float(b)), f"jump {float(lv)} -> {float(rv)}")
                )
    for p, a, b in _piece_spans(fn, cap):
        curv = (p.d2(a), p.d2(b))
        if min(curv) < 0:
            report.violations.append(
                Violation("convexity", (float(a), float(b)), f"l'' reaches {float(min(curv))}")
            )
        smin, where = _slope_min(p, a, b)
        if smin < Fraction(MIN_SLOPE):
            report.violations.append(
                Violation("monotonicity", (float(a), float(b)),
                          f"l' = {float(smin)} at x = {float(where)}")
            )
        cands = [float(a), float(b)]
        _, c1, c2, c3 = (float(c) for c in p.coeffs)
        cands += [r for r in _quadratic_roots(3 * c3, 2 * c2, c1) if float(a) < r < float(b)]
        lmin = min(float(p.value(Fraction(x))) for x in cands)
        if lmin < 0:
            report.violations.append(
                Violation("negativity", (float(a), float(b)), f"l reaches {lmin}")
            )
    return report


# -- smoothness constant ----------------------------------------------------


@dataclass(frozen=True)
class SmoothnessBound:
    psi: float
    domain_cap: Fraction


def _piece_extrema(p: Piece, a: Fraction, b: Fraction) -> tuple[float, float, float, float]:
    """Max of ``l``, ``l'``, ``l''`` and min of ``l'`` on ``[a, b]``, in closed form."""
    _, c1, c2, c3 = (float(c) for c in p.coeffs)
    fa, fb = float(a), float(b)
    # l: endpoints plus stationary points (roots of l')
    xs = [a, b]
    l_vals = [float(p.value(a)), float(p.value(b))]
    for r in _quadratic_roots(3 * c3, 2 * c2, c1):
        if fa < r < fb:
            l_vals.append(float(p.value(Fraction(r))))
    # l': endpoints plus the root of l'' (exact rational)
    d1_vals = [p.d1(x) for x in xs]
    if p.coeffs[3] != 0:
        vertex = -p.coeffs[2] / (3 * p.coeffs[3])
        if a < vertex < b:
            d1_vals.append(p.d1(vertex))
    # l'' is linear: endpoints suffice
    d2_vals = [p.d2(x) for x in xs]
    return max(l_vals), float(max(d1_vals)), float(max(d2_vals)), float(min(d1_vals))


def compute_psi(fns: Sequence[CostFunction], cap) -> SmoothnessBound:
    """Smallest constant bounding ``cap``, ``l``, ``l'``, ``l''`` and ``1/l'`` on ``[0, cap]``."""
    cap = _to_fraction(cap)
    if cap <= 0:
        raise ValueError("domain cap must be positive")
    psi = float(cap)
    for e, fn in enumerate(fns):
        for p, a, b in _piece_spans(fn, cap):
            lmax, d1max, d2max, d1min = _piece_extrema(p, a, b)
            if d1min < MIN_SLOPE:
                raise SmoothnessError(
                    f"edge {e}: l' drops to {d1min} on [{float(a)}, {float(b)}]; "
                    "costs must be strictly increasing"
                )
            psi = max(psi, lmax, d1max, d2max, 1.0 / d1min)
    return SmoothnessBound(psi=psi, domain_cap=cap)
