"""Continuous-time simple random walk, killed walk and Feynman-Kac estimators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import _kernels
from ._kernels import core
from .env import Environment, WindowError
from .potential import ConstantPotential, Potential, as_potential
from .rng import as_generator
from .stats import Estimate, mean_estimate, proportion_estimate


class _Cemetery:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "CEMETERY"

    def __reduce__(self):
        return (_Cemetery, ())


CEMETERY = _Cemetery()


@dataclass
class Trajectory:
    """Piecewise-constant path stored as its jump events."""

    start: int
    events: list[tuple[float, object]] = field(default_factory=list)
    horizon: float = 0.0

    @property
    def lifetime(self) -> float | None:
        if self.events and self.events[-1][1] is CEMETERY:
            return self.events[-1][0]
        return None

    def position_at(self, t: float):
        x = self.start
        for s, y in self.events:
            if s > t:
                break
            x = y
        return x

    def sojourns(self):
        """Yield ``(site, t_enter, t_leave)`` for every live stretch up to the horizon."""
        x, t0 = self.start, 0.0
        for s, y in self.events:
            yield x, t0, s
            if y is CEMETERY:
                return
            x, t0 = y, s
        if self.horizon > t0:
            yield x, t0, self.horizon

    def integral(self, pot: Potential | Environment, until: float | None = None) -> float:
        """Exact integral of a time-homogeneous potential along the path."""
        pot = as_potential(pot)
        until = self.horizon if until is None else until
        total = 0.0
        for x, a, b in self.sojourns():
            if a >= until:
                break
            total += pot(0.0, x) * (min(b, until) - a)
        return total

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "site"])
            w.writerow([0.0, self.start])
            for s, y in self.events:
                w.writerow([s, "DEAD" if y is CEMETERY else y])


def simulate_srw(x0: int, t_max: float, seed) -> Trajectory:
    """Rate-one simple random walk on ``[0, t_max]``."""
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    gen = as_generator(seed, "srw")
    traj = Trajectory(int(x0), [], float(t_max))
    x, s = int(x0), 0.0
    while True:
        s += gen.exponential()
        if s >= t_max:
            return traj
        x += 1 if gen.random() < 0.5 else -1
        traj.events.append((s, x))


def hitting_time(traj: Trajectory, y: int) -> float | None:
    """First time the path sits at ``y``; ``None`` if not before horizon or death."""
    if traj.start == y:
        return 0.0
    for s, x in traj.events:
        if x is CEMETERY:
            return None
        if x == y:
            return s
    return None


def simulate_killed_walk(kappa: Potential, x0: int, seed, t_max: float = math.inf) -> Trajectory:
    """Rate-one walk killed at rate ``kappa(t, x)``, by thinning against ``kappa.hi``.

    Kill proposals arrive at rate ``kappa.hi`` and are accepted with
    probability ``kappa(t, x) / kappa.hi``.  The returned trajectory ends with
    a CEMETERY event at the lifetime (unless censored by ``t_max``).
    """
    kappa = as_potential(kappa)
    if not kappa.lo > 0:
        raise ValueError(
            f"killing rate must be bounded below by a positive constant, got lower bound {kappa.lo}"
        )
    gen = as_generator(seed, "killed")
    rate = 1.0 + kappa.hi
    traj = Trajectory(int(x0), [], float(t_max))
    x, s = int(x0), 0.0
    while True:
        s += gen.exponential() / rate
        if s >= t_max:
            return traj
        v = gen.random() * rate
        if v < 1.0:
            x += 1 if v < 0.5 else -1
            traj.events.append((s, x))
        elif v - 1.0 < kappa(s, x):
            traj.events.append((s, CEMETERY))
            traj.horizon = s
            return traj


def shift_potential(kappa: Potential) -> tuple[Potential, float]:
    """Shift a bounded potential so it is bounded below by a positive constant.

    With ``C > sup|kappa|`` the function ``u(t, y) exp(-2 C t)`` solves the
    same equation with ``kappa + 2C``, which lies in ``(C, 3C)``.  Returns the
    shifted potential and ``C``.
    """
    kappa = as_potential(kappa)
    c = max(abs(kappa.lo), abs(kappa.hi)) + 1.0
    return kappa.shifted(2.0 * c), c


def chernoff_halfwidth(growth: float, t: float, tol: float = 1e-12) -> int:
    """Sites needed so that ``exp(growth * t) * P_0(X_t >= L) <= tol``.

    Uses ``P_0(X_t >= a t) <= exp(-(a - 1) t)``, which gives
    ``L = (1 + growth) t + log(1 / tol)``.
    """
    return int(math.ceil((1.0 + max(growth, 0.0)) * t + math.log(1.0 / tol))) + 1


def heat_kernel(y: int | np.ndarray, t: float) -> np.ndarray:
    """``P_0(X_t = y)`` for the rate-one walk, equal to ``exp(-t) I_|y|(t)``."""
    return special.ive(np.abs(np.asarray(y)), float(t))


def _kernel_window(pot: Potential, x0: int, t: float, growth: float = 0.0) -> tuple[int, int]:
    lo_attr = getattr(pot, "window_lo", None)
    if lo_attr is not None:
        return pot.window_lo, pot.window_hi
    w = chernoff_halfwidth(growth, t, 1e-15)
    return x0 - w, x0 + w


def _raise_on(status: int, what: str) -> None:
    if status == _kernels.WINDOW_EXIT:
        raise WindowError(f"{what}: a path left the simulation window; enlarge the window")


def srw_endpoints(x0: int, t: float, n: int, seed) -> np.ndarray:
    """``n`` independent samples of ``X_t`` started from ``x0``."""
    gen = as_generator(seed, "srw_endpoints")
    lo, hi = _kernel_window(ConstantPotential(0.0), x0, t)
    b, v = ConstantPotential(0.0).table(lo, hi)
    status, ends, _ = core.srw_integral_batch(b, v, lo, int(x0), float(t), int(n), gen)
    _raise_on(status, "srw_endpoints")
    return ends


@dataclass
class KilledSample:
    lifetimes: np.ndarray  # inf where the walk survived past t_max
    integral: np.ndarray  # int_0^t_max kappa(s, X_s) ds along the underlying walk
    endpoints: np.ndarray  # X_{t_max} of the underlying walk
    t_max: float

    def survival(self) -> Estimate:
        """Thinning estimate of ``P(lifetime > t_max)``."""
        return proportion_estimate(self.lifetimes > self.t_max)

    def survival_fk(self) -> Estimate:
        """``E[exp(-int kappa)]`` on the same paths."""
        return mean_estimate(np.exp(-self.integral))


def sample_killed_walks(kappa: Potential, x0: int, t_max: float, n: int, seed) -> KilledSample:
    kappa = as_potential(kappa)
    if not kappa.lo > 0:
        raise ValueError(
            f"killing rate must be bounded below by a positive constant, got lower bound {kappa.lo}"
        )
    gen = as_generator(seed, "killed_batch")
    lo, hi = _kernel_window(kappa, x0, t_max)
    b, v = kappa.table(lo, hi)
    status, life, integ, ends = core.killed_batch(
        b, v, lo, float(kappa.hi), int(x0), float(t_max), int(n), gen
    )
    _raise_on(status, "sample_killed_walks")
    return KilledSample(life, integ, ends, float(t_max))


def feynman_kac_mc(env_or_potential, x: int, y: int, t: float, n_samples: int, seed) -> Estimate:
    """Estimate ``E_x[exp(int_0^t V(X_s) ds); X_t = y]`` for a potential ``V``.

    ``V`` may be an :class:`Environment` (then ``V = xi``), a tabulated
    potential, or a scalar.  The path integral is exact for the
    piecewise-constant walk.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    pot = as_potential(env_or_potential)
    gen = as_generator(seed, "feynman_kac")
    lo, hi = _kernel_window(pot, x, t, growth=max(pot.hi, 0.0))
    b, v = pot.table(lo, hi)
    status, ends, integ = core.srw_integral_batch(b, v, lo, int(x), float(t), int(n_samples), gen)
    _raise_on(status, "feynman_kac_mc")
    return mean_estimate(np.where(ends == y, np.exp(integ), 0.0))
