"""Arithmetic modes for the solver loops.

``standard`` runs numba-compiled copies of :mod:`asrg._kernels` on float64
arrays.  ``high`` runs the same source uncompiled on object arrays of
``mpmath.mpf`` at 50 significant digits (or more, on request).
"""
from __future__ import annotations

import contextlib
import types
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from . import _kernels

__all__ = ["Arithmetic", "STANDARD", "HIGH", "get_arithmetic", "PrecisionError"]

_KERNELS = (
    "piece_of",
    "cost_d",
    "cost_d2",
    "bin_search",
    "redistrib_into",
    "sort_desc",
    "graphflow",
    "_set_group",
    "nested_search",
)


class PrecisionError(RuntimeError):
    """The requested accuracy is below what the arithmetic mode can resolve."""


@lru_cache(maxsize=None)
def _compiled():
    import numba

    ns = dict(vars(_kernels))
    for name in _KERNELS:
        fn = getattr(_kernels, name)
        clone = types.FunctionType(fn.__code__, ns, name, fn.__defaults__, fn.__closure__)
        ns[name] = numba.njit(cache=True, nogil=True)(clone)
    return types.SimpleNamespace(**{name: ns[name] for name in _KERNELS})


class Arithmetic:
    """Number type, array dtype and kernel set for one precision mode."""

    def __init__(self, name: str, dps: int = 50):
        if name not in ("standard", "high"):
            raise ValueError("precision must be 'standard' or 'high'")
        self.name = name
        self.dps = dps if name == "high" else 16
        if name == "high" and dps < 50:
            raise ValueError("high precision needs at least 50 significant digits")

    def __repr__(self) -> str:
        return f"Arithmetic({self.name!r}, dps={self.dps})"

    @property
    def kernels(self):
        return _compiled() if self.name == "standard" else _kernels

    @property
    def dtype(self):
        return np.float64 if self.name == "standard" else object

    @property
    def resolution(self) -> float:
        """Smallest relative tolerance the mode is trusted to resolve."""
        return 1e-12 if self.name == "standard" else 10.0 ** (-(self.dps - 10))

    def context(self):
        if self.name == "standard":
            return contextlib.nullcontext()
        return mpmath.workdps(self.dps)

    def scalar(self, x):
        if self.name == "standard":
            return float(x)
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)

    def array(self, values) -> np.ndarray:
        values = list(values)
        if self.name == "standard":
            return np.array([float(x) for x in values], dtype=np.float64)
        out = np.empty(len(values), dtype=object)
        for i, x in enumerate(values):
            out[i] = self.scalar(x)
        return out

    def zeros(self, shape) -> np.ndarray:
        if self.name == "standard":
            return np.zeros(shape)
        out = np.empty(shape, dtype=object)
        out.fill(mpmath.mpf(0))
        return out

    def tables(self, edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(coef, bps, npieces)`` for a sequence of cost functions."""
        m = len(edges)
        width = max(len(fn.pieces) for fn in edges)
        coef = self.zeros((m, width, 4))
        bps = self.zeros((m, width))
        npieces = np.zeros(m, dtype=np.int64)
        big = float("inf") if self.name == "standard" else mpmath.inf
        for e, fn in enumerate(edges):
            npieces[e] = len(fn.pieces)
            for j in range(width):
                if j < len(fn.pieces):
                    piece = fn.pieces[j]
                    bps[e, j] = self.scalar(piece.start)
                    for c in range(4):
                        coef[e, j, c] = self.scalar(piece.coeffs[c])
                else:
                    bps[e, j] = big
        return coef, bps, npieces


STANDARD = Arithmetic("standard")
HIGH = Arithmetic("high")


def get_arithmetic(precision) -> Arithmetic:
    if isinstance(precision, Arithmetic):
        return precision
    if precision in (None, "standard"):
        return STANDARD
    if precision == "high":
        return HIGH
    raise ValueError(f"unknown precision mode {precision!r}")
