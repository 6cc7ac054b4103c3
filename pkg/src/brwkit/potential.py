"""Bounded potentials kappa(t, x) on the lattice.

Kernels only understand the tabulated form: a set of time breakpoints
``b_0 < b_1 < ...`` and one row of per-site values per time piece, where piece
``k`` covers ``[b_{k-1}, b_k)``.  :class:`FunctionPotential` wraps an
arbitrary callable for the deterministic integrators only.
"""
from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .env import Environment, WindowError


class Potential:
    """Base class; subclasses provide ``on`` and the declared bounds."""

    lo: float
    hi: float

    def on(self, sites: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t: float, x: int) -> float:
        return float(self.on(np.array([x]), t)[0])

    @property
    def breaks(self) -> np.ndarray:
        """Times at which the potential may jump (empty if time-homogeneous)."""
        return np.empty(0)

    def table(self, window_lo: int, window_hi: int) -> tuple[np.ndarray, np.ndarray]:
        raise TypeError(f"{type(self).__name__} has no tabulated form")

    def shifted(self, c: float) -> Potential:
        """The potential ``kappa + c``."""
        return _Shifted(self, c)


class ConstantPotential(Potential):
    def __init__(self, c: float):
        self.c = float(c)
        self.lo = self.hi = self.c

    def on(self, sites, t):
        return np.full(len(sites), self.c)

    def table(self, window_lo, window_hi):
        return np.empty(0), np.full((1, window_hi - window_lo + 1), self.c)

    def __repr__(self):
        return f"ConstantPotential({self.c})"


class PiecewisePotential(Potential):
    """Piecewise constant in time, arbitrary per site, on a fixed site window."""

    def __init__(self, breaks, values, window_lo: int):
        breaks = np.asarray(breaks, dtype=np.float64).reshape(-1)
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if values.shape[0] != breaks.size + 1:
            raise ValueError(
                f"{breaks.size} breakpoints need {breaks.size + 1} rows of values, "
                f"got {values.shape[0]}"
            )
        if breaks.size and (np.any(np.diff(breaks) <= 0) or breaks[0] <= 0):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        self._breaks = breaks
        self.values = np.ascontiguousarray(values)
        self.window_lo = int(window_lo)
        self.window_hi = self.window_lo + values.shape[1] - 1
        self.lo = float(values.min())
        self.hi = float(values.max())

    @classmethod
    def from_sites(cls, values, window_lo: int) -> PiecewisePotential:
        return cls(np.empty(0), np.asarray(values, dtype=np.float64)[None, :], window_lo)

    @property
    def breaks(self):
        return self._breaks

    def _check(self, lo, hi):
        if lo < self.window_lo or hi > self.window_hi:
            raise WindowError(
                f"sites [{lo}, {hi}] outside potential window [{self.window_lo}, {self.window_hi}]"
            )

    def piece(self, t: float) -> int:
        return int(np.searchsorted(self._breaks, t, side="right"))

    def on(self, sites, t):
        sites = np.asarray(sites)
        self._check(int(sites.min()), int(sites.max()))
        return self.values[self.piece(t), sites - self.window_lo]

    def table(self, window_lo, window_hi):
        self._check(window_lo, window_hi)
        cols = slice(window_lo - self.window_lo, window_hi - self.window_lo + 1)
        return self._breaks.copy(), np.ascontiguousarray(self.values[:, cols])

    def __repr__(self):
        return (
            f"PiecewisePotential(pieces={self.values.shape[0]}, "
            f"window=[{self.window_lo}, {self.window_hi}])"
        )


class FunctionPotential(Potential):
    """Wrap ``fn(t, sites) -> array``; usable by the integrators only."""

    def __init__(self, fn: Callable[[float, np.ndarray], np.ndarray], lo: float, hi: float,
                 breaks=()):
        self.fn = fn
        self.lo = float(lo)
        self.hi = float(hi)
        self._breaks = np.asarray(breaks, dtype=np.float64)

    @property
    def breaks(self):
        return self._breaks

    def on(self, sites, t):
        return np.asarray(self.fn(t, np.asarray(sites)), dtype=np.float64)


class _Shifted(Potential):
    def __init__(self, base: Potential, c: float):
        self.base = base
        self.c = float(c)
        self.lo = base.lo + self.c
        self.hi = base.hi + self.c

    @property
    def breaks(self):
        return self.base.breaks

    def on(self, sites, t):
        return self.base.on(sites, t) + self.c

    def table(self, window_lo, window_hi):
        b, v = self.base.table(window_lo, window_hi)
        return b, v + self.c


def environment_potential(env: Environment, sign: float = 1.0) -> PiecewisePotential:
    """The time-homogeneous potential ``sign * xi`` on the environment window."""
    return PiecewisePotential.from_sites(sign * env.rates, env.window_lo)


def as_potential(obj) -> Potential:
    if isinstance(obj, Potential):
        return obj
    if isinstance(obj, Environment):
        return environment_potential(obj)
    if np.isscalar(obj):
        return ConstantPotential(float(obj))
    raise TypeError(f"cannot interpret {type(obj).__name__} as a potential")
