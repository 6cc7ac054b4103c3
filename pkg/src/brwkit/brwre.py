"""Branching random walk in a random environment.

Every particle jumps to a uniform neighbour at rate 1 and splits in two at
rate ``xi(site)``.  Particles never interact, so a run is simulated as a
depth-first walk over the genealogical tree: each particle is followed to the
horizon before its younger siblings are processed.  This gives exactly the
same law as a global event queue while touching one particle at a time.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from ._kernels import core
from .env import Environment, WindowError
from .fkpp import LatticeField
from .rng import as_generator
from .stats import Estimate, mean_estimate, proportion_estimate

DEFAULT_CAP = 10**6
MAX_CAP_RATE = 0.01


class CapRateError(RuntimeError):
    """Too many runs hit the population cap for an unbiased estimate."""


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    positions: np.ndarray  # sorted
    time: float
    population_cap: int
    capped: bool
    branch_times: np.ndarray  # sorted

    @property
    def population(self) -> int:
        return int(self.positions.size)

    def population_at(self, s: float) -> int:
        """Number of particles alive at time ``s <= time``."""
        return 1 + int(np.searchsorted(self.branch_times, s, side="right"))

    def summary(self) -> dict:
        return {
            "t": self.time,
            "M": max_position(self) if not self.capped else None,
            "population": self.population,
            "capped": self.capped,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.summary())
        if path is not None:
            Path(path).write_text(text)
        return text


def _window_error(env: Environment, what: str) -> WindowError:
    return WindowError(
        f"{what}: a particle left the environment window [{env.window_lo}, {env.window_hi}]; "
        f"use a window wider than the light cone (es + 2) t around the start"
    )


def simulate(env: Environment, x0: int, t_max: float, cap: int = DEFAULT_CAP, seed=0) -> ParticleSystem:
    """Simulate one system from a single particle at ``x0`` up to ``t_max``."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    env.require(x0, x0)
    gen = as_generator(seed, "brw")
    status, pos, bt = core.brw_positions(env.rates, env.window_lo, int(x0), float(t_max), int(cap), gen)
    if status == _kernels.WINDOW_EXIT:
        raise _window_error(env, "simulate")
    return ParticleSystem(np.sort(pos), float(t_max), int(cap), status == _kernels.CAPPED, np.sort(bt))


def max_position(system: ParticleSystem) -> int:
    if system.capped:
        raise ValueError("capped system: the maximum is not available")
    return int(system.positions[-1])


def counts(system: ParticleSystem, y: int) -> tuple[int, int]:
    """``(N(t, y), N_geq(t, y))``."""
    if system.capped:
        raise ValueError("capped system: counts are not available")
    p = system.positions
    return int(np.sum(p == y)), int(p.size - np.searchsorted(p, y, side="left"))


@dataclass
class Ensemble:
    """Per-run summaries of independent systems; capped runs are flagged, not dropped."""

    x: int
    t: float
    y_count: int
    max_pos: np.ndarray
    population: np.ndarray
    capped: np.ndarray
    log_prod: np.ndarray  # sum over particles of log(1 - w0(site))
    n_at: np.ndarray  # N(t, y_count)
    n_geq: np.ndarray  # N_geq(t, y_count)

    @property
    def n_capped(self) -> int:
        return int(self.capped.sum())

    @property
    def ok(self) -> np.ndarray:
        return ~self.capped.astype(bool)

    def require_cap_rate(self, limit: float = MAX_CAP_RATE) -> None:
        rate = self.n_capped / self.capped.size
        if rate > limit:
            raise CapRateError(
                f"{self.n_capped} of {self.capped.size} runs hit the population cap at t={self.t}; "
                f"reduce t or raise the cap"
            )

    def to_csv(self, path: str | Path, extra: dict | None = None) -> None:
        extra = extra or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "t", "M", "population", "capped", *extra])
            for i in range(self.capped.size):
                w.writerow([i, self.t, int(self.max_pos[i]), int(self.population[i]),
                            int(self.capped[i]), *extra.values()])


def run_ensemble(env: Environment, x: int, t: float, n_runs: int, seed, cap: int = DEFAULT_CAP,
                 y_count: int = 0, w0: LatticeField | None = None) -> Ensemble:
    env.require(x, x)
    if w0 is None:
        log_g = np.zeros(len(env))
    else:
        g = np.array([1.0 - w0.at(int(z)) for z in env.sites])
        if np.any((g < 0) | (g > 1)):
            raise ValueError("w0 must take values in [0, 1]")
        with np.errstate(divide="ignore"):
            log_g = np.log(g)
    gen = as_generator(seed, "brw_ensemble")
    status, mx, pop, capped, lp, n_at, n_geq = core.brw_batch(
        env.rates, env.window_lo, int(x), float(t), int(n_runs), int(cap), log_g, int(y_count), gen
    )
    if status == _kernels.WINDOW_EXIT:
        raise _window_error(env, "run_ensemble")
    return Ensemble(int(x), float(t), int(y_count), mx, pop, capped, lp, n_at, n_geq)


@dataclass
class CappedEstimate:
    value: float
    std_error: float
    n_used: int
    n_capped: int

    @property
    def estimate(self) -> Estimate:
        return Estimate(self.value, self.std_error)


def _capped(est: Estimate, ens: Ensemble) -> CappedEstimate:
    return CappedEstimate(est.value, est.std_error, int(ens.ok.sum()), ens.n_capped)


def estimate_max_cdf(env: Environment, x: int, y: int, t: float, n_runs: int, seed,
                     cap: int = DEFAULT_CAP) -> CappedEstimate:
    """Empirical ``P_x(M(t) >= y)``; capped runs are excluded and counted."""
    ens = run_ensemble(env, x, t, n_runs, seed, cap)
    ens.require_cap_rate()
    return _capped(proportion_estimate(ens.max_pos[ens.ok] >= y), ens)


def mckean_functional(env: Environment, x: int, w0: LatticeField, t: float, n_runs: int, seed,
                      cap: int = DEFAULT_CAP) -> CappedEstimate:
    """``1 - E_x[prod_z (1 - w0(z))^{N(t, z)}]`` with ``0^0 = 1``."""
    ens = run_ensemble(env, x, t, n_runs, seed, cap, w0=w0)
    ens.require_cap_rate()
    return _capped(mean_estimate(1.0 - np.exp(ens.log_prod[ens.ok])), ens)


@dataclass
class MeanCounts:
    n_at: CappedEstimate  # E[N(t, y)]
    n_geq: CappedEstimate  # E[N_geq(t, y)]
    population: CappedEstimate
    max_cdf: CappedEstimate  # P(M(t) >= y)


def mean_counts(env: Environment, x: int, y: int, t: float, n_runs: int, seed,
                cap: int = DEFAULT_CAP) -> MeanCounts:
    ens = run_ensemble(env, x, t, n_runs, seed, cap, y_count=y)
    ens.require_cap_rate()
    ok = ens.ok
    return MeanCounts(
        _capped(mean_estimate(ens.n_at[ok]), ens),
        _capped(mean_estimate(ens.n_geq[ok]), ens),
        _capped(mean_estimate(ens.population[ok]), ens),
        _capped(proportion_estimate(ens.max_pos[ok] >= y), ens),
    )


@dataclass
class GrowthRow:
    t: float
    frequency: float  # P(N(t/2, x) <= t^2)
    std_error: float
    n_capped: int


def growth_check(env: Environment, x: int, t_grid, n_runs: int, seed, cap: int = DEFAULT_CAP) -> list[GrowthRow]:
    """Empirical ``P_x(N(t/2, x) <= t^2)`` for each ``t``; capped runs are excluded."""
    rows = []
    for k, t in enumerate(t_grid):
        ens = run_ensemble(env, x, 0.5 * float(t), n_runs, as_generator(seed, "growth", k), cap, y_count=x)
        ens.require_cap_rate()
        est = proportion_estimate(ens.n_at[ens.ok] <= float(t) ** 2)
        rows.append(GrowthRow(float(t), est.value, est.std_error, ens.n_capped))
    return rows

