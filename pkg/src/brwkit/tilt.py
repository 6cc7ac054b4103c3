"""Tilted random walks: partition functions, tilted chains, speed calibration
and the monotone coupling of three tilted walks.

For a potential ``zeta <= 0`` and ``eta <= 0`` the tilt of the rate-one walk
up to hitting times is again a nearest-neighbour walk, with jump rate
``lam(x) = 1 - zeta(x) - eta`` and right-step probability
``1 / (2 lam(x) Z_{x,x+1})``, where ``Z_{x,y}`` is the partition function.
The ``Z_{x,x+1}`` obey ``Z_{x,x+1} = 1 / (2 lam(x) - Z_{x-1,x})``, which we
run left to right from the homogeneous closed form.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from ._kernels import core
from .env import Environment, WindowError, shifted_potential
from .rng import as_generator
from .stats import Estimate, mean_estimate, proportion_estimate
from .walk import Trajectory, chernoff_halfwidth

BURN_IN = 50


class CalibrationError(RuntimeError):
    pass


def _check_exponent(gamma: float, eta: float) -> float:
    if gamma > 0 or eta > 0:
        raise ValueError(f"need gamma <= 0 and eta <= 0, got gamma={gamma}, eta={eta}")
    return gamma + eta


def z_homogeneous(gamma: float, eta: float) -> float:
    """``Z_{-1,0}`` for the constant potential ``gamma``: ``1 - g - sqrt(g (g - 2))``, ``g = gamma + eta``."""
    g = _check_exponent(gamma, eta)
    return 1.0 - g - math.sqrt(g * (g - 2.0))


def speed_homogeneous(gamma: float, eta: float) -> float:
    """Speed ``sqrt(g (g - 2))`` of the homogeneous tilted walk, ``g = gamma + eta``."""
    g = _check_exponent(gamma, eta)
    return math.sqrt(g * (g - 2.0))


@dataclass(frozen=True, eq=False)
class TiltParams:
    eta: float
    zeta: np.ndarray
    zeta_lo: int
    delta: float

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=np.float64)
        if self.eta > 0:
            raise ValueError(f"eta must be <= 0, got {self.eta}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if np.any(z > 0) or np.any(z < -self.delta - 1e-12):
            raise ValueError(f"zeta must lie in [-{self.delta}, 0]")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)

    @property
    def zeta_hi(self) -> int:
        return self.zeta_lo + self.zeta.size - 1

    @classmethod
    def homogeneous(cls, gamma: float, eta: float, window: tuple[int, int], delta: float | None = None) -> TiltParams:
        lo, hi = window
        return cls(eta, np.full(hi - lo + 1, float(gamma)), lo, -gamma if delta is None else delta)

    @classmethod
    def from_environment(cls, env: Environment, eta: float) -> TiltParams:
        zeta, delta = shifted_potential(env)
        return cls(eta, zeta, env.window_lo, delta)

    def with_zeta(self, zeta) -> TiltParams:
        return TiltParams(self.eta, np.broadcast_to(zeta, self.zeta.shape).copy(), self.zeta_lo, self.delta)


@dataclass(frozen=True, eq=False)
class TiltedChain:
    window_lo: int
    window_hi: int
    lam: np.ndarray
    z_right: np.ndarray  # Z_{x,x+1}
    p_right: np.ndarray
    p_left: np.ndarray
    e: np.ndarray  # E_x[H_{x+1}]

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    def index(self, x: int) -> int:
        if not self.window_lo <= x <= self.window_hi:
            raise WindowError(f"site {x} outside chain window [{self.window_lo}, {self.window_hi}]")
        return x - self.window_lo

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site", "lambda", "z_right", "p_right"])
            for row in zip(self.sites.tolist(), self.lam.tolist(), self.z_right.tolist(), self.p_right.tolist()):
                w.writerow([row[0], *map(repr, row[1:])])


def _recursion(zeta: np.ndarray, eta: float):
    lam = np.ascontiguousarray(1.0 - zeta - eta)
    g0 = float(zeta[0])
    return lam, core.tilt_recursion(lam, z_homogeneous(g0, eta), 1.0 / speed_homogeneous(g0, eta))


def build_tilted_chain(params: TiltParams, window: tuple[int, int], burn_in: int = BURN_IN) -> TiltedChain:
    """Tilted chain on ``window``; the recursion starts ``burn_in`` sites further left."""
    lo, hi = window
    if lo > hi:
        raise ValueError("empty window")
    start = lo - burn_in
    if start < params.zeta_lo or hi > params.zeta_hi:
        raise WindowError(
            f"chain on [{lo}, {hi}] with burn-in {burn_in} needs zeta on [{start}, {hi}], "
            f"have [{params.zeta_lo}, {params.zeta_hi}]"
        )
    zeta = params.zeta[start - params.zeta_lo : hi - params.zeta_lo + 1]
    if params.eta == 0 and not np.all(zeta == zeta[0]) and np.any(zeta == 0):
        raise ValueError("eta = 0 with an inhomogeneous zeta touching 0 gives no contraction; use eta < 0")
    if params.eta == 0 and zeta[0] == 0:
        raise ValueError("eta = 0 and zeta = 0: the tilted walk has no drift and no finite E[H_1]")
    lam, (z, pr, pl, e) = _recursion(zeta, params.eta)
    cut = slice(burn_in, None)
    return TiltedChain(lo, hi, lam[cut], z[cut], pr[cut], pl[cut], e[cut])


def expected_hit_one(chain: TiltedChain, x: int) -> float:
    """``E_x[H_{x+1}]`` under the tilted chain."""
    return float(chain.e[chain.index(x)])


def simulate_tilted(chain: TiltedChain, x0: int, t_max: float, seed) -> Trajectory:
    """One path of the tilted chain up to ``t_max``; leaving the window raises."""
    gen = as_generator(seed, "tilted")
    traj = Trajectory(int(x0), [], float(t_max))
    x = int(x0)
    i = chain.index(x)
    s = 0.0
    while True:
        s += gen.exponential() / chain.lam[i]
        if s >= t_max:
            return traj
        x += 1 if gen.random() < chain.p_right[i] else -1
        if not chain.window_lo <= x <= chain.window_hi:
            raise WindowError(f"tilted path left window [{chain.window_lo}, {chain.window_hi}] at time {s:.4g}")
        i = x - chain.window_lo
        traj.events.append((s, x))


@dataclass
class TiltedSample:
    hits: np.ndarray  # inf if not hit before t_max
    ends: np.ndarray
    jumps: np.ndarray
    t_max: float


def sample_tilted(chain: TiltedChain, x0: int, target: int | None, t_max: float, n: int, seed) -> TiltedSample:
    """``n`` tilted paths stopped at ``target`` (never, if ``None``) or ``t_max``."""
    gen = as_generator(seed, "tilted_batch")
    tgt = chain.window_lo - 10 if target is None else int(target)
    chain.index(x0)
    status, hits, ends, jumps = core.tilted_batch(
        chain.p_right, chain.lam, chain.window_lo, int(x0), tgt, float(t_max), int(n), gen
    )
    if status == _kernels.WINDOW_EXIT:
        raise WindowError(f"a tilted path left window [{chain.window_lo}, {chain.window_hi}]")
    return TiltedSample(hits, ends, jumps, float(t_max))


def empirical_speed(chain: TiltedChain, x0: int, T: float, n_paths: int, seed) -> Estimate:
    """Mean of ``(X_T - x0) / T`` over ``n_paths`` independent paths."""
    s = sample_tilted(chain, x0, None, T, n_paths, seed)
    return mean_estimate((s.ends - x0) / T)


@dataclass
class ZEstimate:
    value: float
    std_error: float
    censored: float  # fraction of paths cut at t_cap or at the window edge
    bias_bound: float  # exp(eta * t_cap): largest weight a path hitting after t_cap could carry


def z_mc(zeta, eta: float, x: int, y: int, n_samples: int, seed, t_cap: float | None = None,
         zeta_lo: int | None = None) -> ZEstimate:
    """Monte Carlo of ``Z_{x,y} = E_x[exp(int_0^{H_y} (zeta(X_s) + eta) ds)]``.

    ``zeta`` is a scalar or an array of values starting at site ``zeta_lo``.
    Paths not hitting ``y`` by ``t_cap`` contribute 0, so the estimate is
    biased downward by at most ``bias_bound``.
    """
    if x > y:
        raise ValueError("need x <= y")
    if eta > 0:
        raise ValueError("eta must be <= 0")
    if t_cap is None:
        t_cap = min(30.0 / abs(eta), 1000.0) if eta < 0 else 1000.0
    if np.isscalar(zeta):
        if zeta > 0:
            raise ValueError("zeta must be <= 0")
        if zeta == 0 and eta == 0:
            return ZEstimate(1.0, 0.0, 0.0, 0.0)
        lo = x - chernoff_halfwidth(0.0, t_cap, 1e-12)
        zarr = np.full(y - lo + 1, float(zeta))
    else:
        zarr = np.asarray(zeta, dtype=np.float64)
        if zeta_lo is None:
            raise ValueError("array zeta needs zeta_lo")
        lo = zeta_lo
        if np.any(zarr > 0):
            raise ValueError("zeta must be <= 0")
        if eta == 0 and np.all(zarr == 0):
            return ZEstimate(1.0, 0.0, 0.0, 0.0)
        if not lo <= x <= y <= lo + zarr.size - 1:
            raise WindowError("x and y must lie inside the zeta window")
    gen = as_generator(seed, "z_mc")
    _, w, cens = core.srw_tilt_weight_batch(
        np.ascontiguousarray(zarr), lo, float(eta), int(x), int(y), float(t_cap), int(n_samples), gen
    )
    est = mean_estimate(w)
    return ZEstimate(est.value, est.std_error, float(cens.mean()), math.exp(eta * t_cap))


# ---------------------------------------------------------------------------
# speed calibration


def _expand(zeta: np.ndarray, burn_in: int) -> np.ndarray:
    """A single value stands for a homogeneous potential."""
    if zeta.size == 1:
        return np.full(burn_in + 200, zeta[0])
    if zeta.size <= burn_in:
        raise ValueError(f"need more than burn_in={burn_in} sites")
    return np.ascontiguousarray(zeta)


def _avg_e(zeta: np.ndarray, eta: float, burn_in: int) -> np.ndarray:
    _, (_, _, _, e) = _recursion(zeta, eta)
    return e[burn_in:]


def _batch_se(e: np.ndarray, n_batches: int = 20) -> float:
    k = e.size // n_batches
    if k < 2:
        return float("nan")
    means = e[: k * n_batches].reshape(n_batches, k).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


@dataclass
class EtaBarResult:
    v: float
    eta_bar: float
    residual: float  # v * avg(e_x) - 1 at eta_bar
    std_error: float  # batch-means error of the spatial average of e_x
    iterations: int

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps({"v": self.v, "eta_bar": self.eta_bar, "residual": self.residual,
                           "std_error": self.std_error, "iterations": self.iterations})
        if path is not None:
            Path(path).write_text(text)
        return text


def solve_eta_bar(zeta_sample, v: float, tol: float = 1e-10, burn_in: int = BURN_IN,
                  delta: float | None = None) -> EtaBarResult:
    """Root ``eta`` of ``v * mean_x E_x^{zeta,eta}[H_{x+1}] = 1`` by bisection.

    The spatial mean over ``zeta_sample`` (after ``burn_in`` sites) stands in
    for the expectation over the environment.
    """
    zeta = np.ascontiguousarray(np.atleast_1d(np.asarray(zeta_sample, dtype=np.float64)))
    if np.any(zeta > 0):
        raise ValueError("zeta must be <= 0")
    zeta = _expand(zeta, burn_in)
    delta = max(0.0, float(-zeta.min())) if delta is None else delta
    vc = math.sqrt(delta * (2.0 + delta))
    if not v > vc:
        raise ValueError(f"v={v} must exceed the critical bound sqrt(D (2 + D)) = {vc}")

    def f(eta):
        return v * _avg_e(zeta, eta, burn_in).mean() - 1.0

    hi = -0.5
    f_hi = f(hi)
    while f_hi <= 0:
        hi /= 10.0
        if hi > -1e-10:
            raise CalibrationError(f"no sign change for eta in [-0.5, {hi * 10}]: v too small")
        f_hi = f(hi)
    lo = -1.0
    f_lo = f(lo)
    while f_lo >= 0:
        lo *= 2.0
        if lo < -1e8:
            raise CalibrationError(f"no sign change for eta in [{lo / 2}, -1]")
        f_lo = f(lo)
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if not f_lo <= fm <= f_hi:
            raise CalibrationError(f"eta -> v * avg(e) - 1 not monotone near eta={mid}")
        if fm < 0:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
        it += 1
    eta = 0.5 * (lo + hi)
    e = _avg_e(zeta, eta, burn_in)
    return EtaBarResult(v, eta, float(v * e.mean() - 1.0), _batch_se(e), it)


@dataclass
class VelocityConstants:
    v1: float
    v2: float
    vc_upper: float


def velocity_constants(zeta_sample, es: float, tol: float = 1e-10, burn_in: int = BURN_IN,
                       delta: float | None = None) -> VelocityConstants:
    """``v1 = es + 2``, ``vc_upper = sqrt(D (2 + D))`` and ``v2``.

    ``v2`` is the infimum of ``v > v1 + 1`` with ``|eta_bar(v)| >= 2 v1 + 2``.
    As ``|eta_bar|`` increases with ``v``, this is ``max(v1 + 1, v*)`` where
    ``eta_bar(v*) = -(2 v1 + 2)``, and ``v* = 1 / avg(e_x)`` at that ``eta``.
    """
    zeta = _expand(np.atleast_1d(np.asarray(zeta_sample, dtype=np.float64)), burn_in)
    delta = max(0.0, float(-zeta.min())) if delta is None else delta
    v1 = es + 2.0
    eta_star = -(2.0 * v1 + 2.0)
    v_star = 1.0 / _avg_e(np.ascontiguousarray(zeta), eta_star, burn_in).mean()
    return VelocityConstants(v1, max(v1 + 1.0, v_star), math.sqrt(delta * (2.0 + delta)))


# ---------------------------------------------------------------------------
# coupling


@dataclass
class CoupledTriple:
    """Walks for potentials ``0``, ``zeta`` and ``-delta`` on shared randomness (index 0, 1, 2)."""

    Y: np.ndarray  # (3, n_steps + 1) embedded discrete paths
    T: np.ndarray  # (3, n_steps) jump times
    t_max: float

    def counts(self, t: float) -> np.ndarray:
        """``N(t)`` for the three walks."""
        return np.array([np.searchsorted(self.T[c], t, side="right") for c in range(3)])

    def position_at(self, t: float) -> np.ndarray:
        return self.Y[np.arange(3), self.counts(t)]

    def trajectories(self) -> list[Trajectory]:
        out = []
        for c in range(3):
            n = int(np.searchsorted(self.T[c], self.t_max, side="left"))
            ev = list(zip(self.T[c, :n].tolist(), self.Y[c, 1 : n + 1].tolist()))
            out.append(Trajectory(int(self.Y[c, 0]), ev, self.t_max))
        return out

    def violations(self) -> dict[str, int]:
        """Index-wise breaches of ``Y0 <= Yz <= Yd`` and of ``N0 <= Nz <= Nd``.

        ``N`` ordering at all times is equivalent to the reverse ordering of
        the jump times, which is what we test.
        """
        Y, T = self.Y, self.T
        return {
            "Y": int(np.sum(Y[0] > Y[1]) + np.sum(Y[1] > Y[2])),
            "N": int(np.sum(T[0] < T[1]) + np.sum(T[1] < T[2])),
        }


def triple_chains(params: TiltParams, window: tuple[int, int], burn_in: int = BURN_IN) -> list[TiltedChain]:
    return [
        build_tilted_chain(params.with_zeta(0.0), window, burn_in),
        build_tilted_chain(params, window, burn_in),
        build_tilted_chain(params.with_zeta(-params.delta), window, burn_in),
    ]


def coupled_triple(params: TiltParams, x0: int, n_steps: int, t_max: float, seed,
                   chains: list[TiltedChain] | None = None) -> CoupledTriple:
    """Run the three tilted walks from ``x0`` for ``n_steps`` jumps on shared randomness."""
    if chains is None:
        chains = triple_chains(params, (x0 - n_steps - 1, x0 + n_steps + 1))
    lo = chains[0].window_lo
    p3 = np.ascontiguousarray(np.stack([c.p_right for c in chains]))
    lam3 = np.ascontiguousarray(np.stack([c.lam for c in chains]))
    gen = as_generator(seed, "coupled")
    status, Y, T = core.coupled_steps(p3, lam3, lo, int(x0), int(n_steps), gen)
    if status == _kernels.WINDOW_EXIT:
        raise WindowError(f"a coupled walk left window [{lo}, {chains[0].window_hi}]")
    return CoupledTriple(Y, T, float(t_max))


def _hit_times(tr: CoupledTriple, y: int) -> np.ndarray:
    out = np.full(3, math.inf)
    for c in range(3):
        k = np.flatnonzero(tr.Y[c] == y)
        if k.size:
            out[c] = 0.0 if k[0] == 0 else tr.T[c, k[0] - 1]
    return out


@dataclass
class HittingOrderReport:
    mode: str
    t_grid: list[float]
    cdf: list[list[Estimate]]  # cdf[c][k] = P^c(H_y <= t_k)
    violations: int  # samplewise (coupled) or beyond 3 sigma (independent)
    ok: bool


def hitting_order_check(params: TiltParams, x: int, y: int, t_grid, n_samples: int, seed,
                        mode: str = "independent") -> HittingOrderReport:
    """Compare ``P^c_x(H_y <= t)`` for ``c`` = ``0``, ``zeta``, ``-delta``."""
    if x > y:
        raise ValueError("need x <= y")
    t_grid = sorted(float(t) for t in t_grid)
    t_max = t_grid[-1]
    lam_max = 1.0 + params.delta - params.eta
    width = chernoff_halfwidth(lam_max - 1.0, t_max, 1e-12)
    if mode == "coupled":
        n_steps = int(math.ceil(lam_max * t_max + 10 * math.sqrt(lam_max * t_max) + 20))
        chains = triple_chains(params, (x - n_steps - 1, x + n_steps + 1))
        gen = as_generator(seed, "hitting_coupled")
        H = np.empty((n_samples, 3))
        bad = 0
        for i in range(n_samples):
            tr = coupled_triple(params, x, n_steps, t_max, gen, chains)
            if tr.T[:, -1].min() <= t_max:
                raise RuntimeError("too few coupled steps to reach t_max")
            H[i] = _hit_times(tr, y)
            bad += int(H[i, 0] < H[i, 1]) + int(H[i, 1] < H[i, 2])
        cdf = [[proportion_estimate(H[:, c] <= t) for t in t_grid] for c in range(3)]
        return HittingOrderReport(mode, t_grid, cdf, bad, bad == 0)
    if mode != "independent":
        raise ValueError(f"unknown mode {mode!r}")
    chains = triple_chains(params, (x - width, y))
    cdf = []
    for c, ch in enumerate(chains):
        s = sample_tilted(ch, x, y, t_max, n_samples, as_generator(seed, "hitting_independent", c))
        cdf.append([proportion_estimate(s.hits <= t) for t in t_grid])
    bad = 0
    for k in range(len(t_grid)):
        for a, b in ((0, 1), (1, 2)):
            lo_, hi_ = cdf[a][k], cdf[b][k]
            if lo_.value - hi_.value > 3.0 * math.hypot(lo_.std_error, hi_.std_error):
                bad += 1
    return HittingOrderReport(mode, t_grid, cdf, bad, bad == 0)
