"""Method-of-lines integration of the lattice heat equation with potential and of
the randomized F-KPP equation; quantiles of the maximum via duality.

Both equations are integrated with classical explicit RK4 on the finite
window.  Sites just outside the window are clamped to fixed exterior values:
``0`` on the left and ``1`` on the right for front data, ``0`` on both sides
for generic data.  Several initial conditions on the same window are advanced
together as the rows of one array.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .env import Environment, WindowError
from .potential import FunctionPotential, PiecewisePotential, Potential, as_potential
from .walk import chernoff_halfwidth

DT_MAX = 0.25


class IntegrationError(RuntimeError):
    """The explicit scheme produced a non-finite value."""


@dataclass(frozen=True)
class IntegratorOpts:
    dt: float = 0.01
    window_margin: int | None = None  # None: size from the Chernoff light cone
    zero_tol: float = 1e-12
    tol: float = 1e-12  # truncation target for automatic window sizing

    def __post_init__(self):
        if not 0 < self.dt <= DT_MAX:
            raise ValueError(f"dt must lie in (0, {DT_MAX}], got {self.dt}")
        if not 0 < self.zero_tol <= 1e-6:
            raise ValueError(f"zero_tol must lie in (0, 1e-6], got {self.zero_tol}")
        if self.window_margin is not None and self.window_margin < 0:
            raise ValueError("window_margin must be non-negative")


@dataclass(frozen=True, eq=False)
class LatticeField:
    window_lo: int
    window_hi: int
    values: np.ndarray
    time: float = 0.0
    boundary_left: float = 0.0
    boundary_right: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.window_hi - self.window_lo + 1,):
            raise ValueError(
                f"window [{self.window_lo}, {self.window_hi}] needs "
                f"{self.window_hi - self.window_lo + 1} values, got shape {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_sites(cls, values: dict[int, float], window: tuple[int, int], **kw) -> LatticeField:
        lo, hi = window
        v = np.zeros(hi - lo + 1)
        for x, val in values.items():
            if not lo <= x <= hi:
                raise WindowError(f"site {x} outside window [{lo}, {hi}]")
            v[x - lo] = val
        return cls(lo, hi, v, **kw)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    def at(self, x: int) -> float:
        if x < self.window_lo:
            return self.boundary_left
        if x > self.window_hi:
            return self.boundary_right
        return float(self.values[x - self.window_lo])

    def extended(self, lo: int, hi: int) -> LatticeField:
        """The same field on a larger window, padded with the clamp values."""
        if lo > self.window_lo or hi < self.window_hi:
            raise ValueError("extended window must contain the current one")
        v = np.concatenate([
            np.full(self.window_lo - lo, self.boundary_left),
            self.values,
            np.full(hi - self.window_hi, self.boundary_right),
        ])
        return replace(self, window_lo=lo, window_hi=hi, values=v)

    def restrict(self, lo: int, hi: int) -> LatticeField:
        if lo < self.window_lo or hi > self.window_hi:
            raise WindowError(f"[{lo}, {hi}] not inside [{self.window_lo}, {self.window_hi}]")
        return replace(
            self, window_lo=lo, window_hi=hi,
            values=self.values[lo - self.window_lo : hi - self.window_lo + 1],
        )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site", "value"])
            for x, v in zip(self.sites.tolist(), self.values.tolist()):
                w.writerow([x, repr(v)])


def front_indicator_ic(y: int, window: tuple[int, int]) -> LatticeField:
    """``1_{x >= y}`` on ``window`` with exterior clamps 0 (left) and 1 (right)."""
    lo, hi = window
    if not lo <= y <= hi:
        raise WindowError(f"front position {y} outside window [{lo}, {hi}]")
    return LatticeField(lo, hi, (np.arange(lo, hi + 1) >= y).astype(np.float64), 0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# RK4 core


def _lap(u: np.ndarray, bl, br) -> np.ndarray:
    out = -2.0 * u
    out[:, 1:] += u[:, :-1]
    out[:, :-1] += u[:, 1:]
    out[:, 0] += bl
    out[:, -1] += br
    return out


def _segments(times: np.ndarray, breaks: np.ndarray) -> np.ndarray:
    t_end = float(times[-1]) if times.size else 0.0
    pts = np.concatenate([[0.0], times, breaks[(breaks > 0) & (breaks < t_end)]])
    return np.unique(pts)


def _advance(u, rhs, times, breaks, dt, sites_desc):
    """Integrate ``du/dt = rhs(t, u)`` and return snapshots at ``times``.

    Steps never straddle a potential breakpoint: the segment grid contains all
    output times and breaks, and each segment is cut into equal steps of at
    most ``dt``.  The last stage of a step evaluates just below the segment
    end so piecewise coefficients stay on the current piece.
    """
    times = np.asarray(times, dtype=np.float64)
    out = np.empty((times.size,) + u.shape)
    grid = _segments(times, np.asarray(breaks, dtype=np.float64))
    k_out = 0
    while k_out < times.size and times[k_out] <= 0.0:
        out[k_out] = u
        k_out += 1
    for a, b in zip(grid[:-1], grid[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        h = (b - a) / n
        b_in = np.nextafter(b, a)
        for i in range(n):
            t0 = a + i * h
            t1 = b_in if i == n - 1 else t0 + h
            tm = t0 + 0.5 * h
            k1 = rhs(t0, u)
            k2 = rhs(tm, u + 0.5 * h * k1)
            k3 = rhs(tm, u + 0.5 * h * k2)
            k4 = rhs(t1, u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            row, col = np.argwhere(~np.isfinite(u))[0]
            raise IntegrationError(
                f"non-finite value at time {b:.6g}, site {sites_desc[0] + col} (row {row}); "
                f"dt={dt} on window [{sites_desc[0]}, {sites_desc[1]}]"
            )
        while k_out < times.size and times[k_out] <= b + 1e-12:
            out[k_out] = u
            k_out += 1
    return out


def _check_times(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("output times must be non-negative and sorted")
    return times


def _linear_window(u0: LatticeField, pot: Potential, t: float, opts: IntegratorOpts):
    growth = max(-pot.lo, 0.0)
    if opts.window_margin is not None:
        m = opts.window_margin
        lo, hi = u0.window_lo - m, u0.window_hi + m
    else:
        m = chernoff_halfwidth(growth, t, opts.tol)
        lo, hi = u0.window_lo - m, u0.window_hi + m
        # a tabulated potential fixes the domain: the automatic margin stops there
        plo = getattr(pot, "window_lo", None)
        if plo is not None:
            lo = max(lo, min(pot.window_lo, u0.window_lo))
            hi = min(hi, max(pot.window_hi, u0.window_hi))
    return lo, hi


def solve_linear(u0: LatticeField, kappa, times, opts: IntegratorOpts | None = None) -> list[LatticeField]:
    """Solve ``du/dt = 1/2 Lap u - kappa(t, x) u`` and return the fields at ``times``."""
    opts = opts or IntegratorOpts()
    pot = as_potential(kappa)
    times = _check_times(times)
    lo, hi = _linear_window(u0, pot, float(times[-1]), opts)
    base = u0.extended(lo, hi)
    sites = base.sites
    bl, br = base.boundary_left, base.boundary_right

    def rhs(t, u):
        return 0.5 * _lap(u, bl, br) - pot.on(sites, t) * u

    snaps = _advance(base.values[None, :].copy(), rhs, times, pot.breaks, opts.dt, (lo, hi))
    return [replace(base, values=s[0], time=float(t)) for s, t in zip(snaps, times)]


def integrate_linear(u0: LatticeField, kappa, t: float, opts: IntegratorOpts | None = None) -> LatticeField:
    return solve_linear(u0, kappa, [t], opts)[0]


def _fkpp_rhs(xi: np.ndarray, bl, br):
    def rhs(t, w):
        return 0.5 * _lap(w, bl, br) + xi * w * (1.0 - w)
    return rhs


def solve_fkpp(w0: LatticeField, env: Environment, times, opts: IntegratorOpts | None = None) -> list[LatticeField]:
    """Solve ``dw/dt = 1/2 Lap w + xi w (1 - w)`` and return the fields at ``times``."""
    opts = opts or IntegratorOpts()
    times = _check_times(times)
    if np.any((w0.values < 0) | (w0.values > 1)):
        raise ValueError("F-KPP initial data must take values in [0, 1]")
    m = opts.window_margin
    if m is None:
        m = chernoff_halfwidth(env.es, float(times[-1]), opts.tol)
        lo = max(w0.window_lo - m, min(env.window_lo, w0.window_lo))
        hi = min(w0.window_hi + m, max(env.window_hi, w0.window_hi))
    else:
        lo, hi = w0.window_lo - m, w0.window_hi + m
    env.require(lo, hi)
    base = w0.extended(lo, hi)
    rhs = _fkpp_rhs(env.restrict(lo, hi), base.boundary_left, base.boundary_right)
    snaps = _advance(base.values[None, :].copy(), rhs, times, (), opts.dt, (lo, hi))
    return [replace(base, values=s[0], time=float(t)) for s, t in zip(snaps, times)]


def integrate_fkpp(w0: LatticeField, env: Environment, t: float, opts: IntegratorOpts | None = None) -> LatticeField:
    return solve_fkpp(w0, env, [t], opts)[0]


def feynman_kac_ode(potential, x: int, y: int, t: float, opts: IntegratorOpts | None = None) -> float:
    """``E_x[exp(int_0^t V(X_s) ds); X_t = y]`` from ``dv/dt = 1/2 Lap v + V v``, ``v(0) = delta_y``."""
    pot = as_potential(potential)
    u0 = LatticeField(y, y, np.ones(1))
    return integrate_linear(u0, _negated(pot), t, opts).at(x)


def _negated(pot: Potential) -> Potential:
    if isinstance(pot, PiecewisePotential):
        return PiecewisePotential(pot.breaks, -pot.values, pot.window_lo)
    return FunctionPotential(lambda t, s: -pot.on(s, t), -pot.hi, -pot.lo, pot.breaks)


# ---------------------------------------------------------------------------
# front solutions w^y(t, x) = P_x(M(t) >= y)


def required_halfwidth(es: float, t: float, tol: float = 1e-12) -> int:
    """Sites on each side of an evaluation point needed for truncation error ``tol``."""
    return chernoff_halfwidth(es, t, tol)


def quantile_bracket(es: float, t: float) -> int:
    """Half-width of the search range for quantiles of the maximum."""
    return math.ceil((es + 2.0) * t) + 5


def front_fields(env: Environment, ys, times, window: tuple[int, int],
                 opts: IntegratorOpts | None = None) -> np.ndarray:
    """Front solutions ``w^y(t, .)`` on ``window`` for every ``y`` and time.

    Returns an array of shape ``(len(ys), len(times), window size)``.  Fronts
    starting left of the window are the constant 1.
    """
    opts = opts or IntegratorOpts()
    times = _check_times(times)
    lo, hi = window
    env.require(lo, hi)
    ys = np.asarray(ys, dtype=np.int64)
    sites = np.arange(lo, hi + 1)
    w = (sites[None, :] >= ys[:, None]).astype(np.float64)
    rhs = _fkpp_rhs(env.restrict(lo, hi), 0.0, 1.0)
    snaps = _advance(w, rhs, times, (), opts.dt, (lo, hi))
    return np.transpose(snaps, (1, 0, 2))


def front_window(env: Environment, x: int, ys, t: float, opts: IntegratorOpts) -> tuple[int, int]:
    """Window around ``x`` wide enough for ``w^y(t, x)``; raises if ``env`` is too small."""
    L = opts.window_margin if opts.window_margin is not None else required_halfwidth(env.es, t, opts.tol)
    ys = np.asarray(ys)
    lo = min(x - L, int(ys.min()) if ys.size else x)
    hi = max(x + L, int(ys.max()) if ys.size else x)
    if not env.covers(lo, hi):
        raise WindowError(
            f"front solutions up to t={t} need sites [{lo}, {hi}] "
            f"(Chernoff half-width {L} around x={x}), environment covers "
            f"[{env.window_lo}, {env.window_hi}]"
        )
    return lo, hi


def front_values(env: Environment, x: int, ys, times, opts: IntegratorOpts | None = None) -> np.ndarray:
    """``w^y(t, x)`` as an array of shape ``(len(ys), len(times))``."""
    opts = opts or IntegratorOpts()
    times = _check_times(times)
    lo, hi = front_window(env, x, ys, float(times[-1]), opts)
    return front_fields(env, ys, times, (lo, hi), opts)[:, :, x - lo]


def _quantiles_from(ys: np.ndarray, w: np.ndarray, eps: float, t: float) -> int:
    ok = np.flatnonzero(w >= eps)
    if ok.size == 0 or w[0] < eps or w[-1] >= eps:
        raise WindowError(
            f"quantile bracket [{ys[0]}, {ys[-1]}] does not bracket level {eps} at t={t}; "
            f"endpoint values {w[0]:.3g}, {w[-1]:.3g}"
        )
    # w^y(t, x) is non-increasing in y, so the admissible set is a left ray
    return int(ys[ok[-1]])


@dataclass
class QuantileTable:
    times: np.ndarray
    ys: np.ndarray
    w: np.ndarray  # w[i, k] = w^{ys[i]}(times[k], x)

    def quantile(self, k: int, eps: float) -> int:
        return _quantiles_from(self.ys, self.w[:, k], eps, float(self.times[k]))


def quantile_table(env: Environment, times, x: int = 0, opts: IntegratorOpts | None = None) -> QuantileTable:
    opts = opts or IntegratorOpts()
    times = _check_times(times)
    B = quantile_bracket(env.es, float(times[-1]))
    ys = np.arange(x - B, x + B + 1)
    return QuantileTable(times, ys, front_values(env, x, ys, times, opts))


def quantile_x_t(env: Environment, t: float, eps: float, opts: IntegratorOpts | None = None,
                 x: int = 0) -> int:
    """Largest ``y`` with ``w^y(t, x) >= eps``."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if t < 0:
        raise ValueError("t must be non-negative")
    return quantile_table(env, [t], x, opts).quantile(0, eps)


def median_m_t(env: Environment, t: float, opts: IntegratorOpts | None = None, x: int = 0) -> int:
    return quantile_x_t(env, t, 0.5, opts, x)


@dataclass
class TightnessRow:
    t: float
    eps: float
    x_t: int
    m_t: int
    x_t_upper: int  # x_t(1 - eps)

    @property
    def spread(self) -> int:
        return self.x_t - self.x_t_upper


def tightness_scan(env: Environment, t_grid, eps: float, opts: IntegratorOpts | None = None) -> list[TightnessRow]:
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    tab = quantile_table(env, sorted(t_grid), 0, opts)
    return [
        TightnessRow(float(t), eps, tab.quantile(k, eps), tab.quantile(k, 0.5), tab.quantile(k, 1 - eps))
        for k, t in enumerate(tab.times)
    ]


def write_scan_csv(rows: list[TightnessRow], path: str | Path, extra: dict | None = None) -> None:
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "eps", "x_t", "m_t", "x_t_upper", "spread", *extra])
        for r in rows:
            w.writerow([r.t, r.eps, r.x_t, r.m_t, r.x_t_upper, r.spread, *extra.values()])


@dataclass
class WaveTimeReport:
    eps: float
    rows: list[tuple[int, float, float | None]] = field(default_factory=list)  # (y, t, t')

    @property
    def u(self) -> float | None:
        """Largest recorded wait; ``None`` if some premise never reached ``1 - eps``."""
        if any(r[2] is None for r in self.rows):
            return None
        return max((r[2] for r in self.rows), default=0.0)

    @property
    def ok(self) -> bool:
        return self.u is not None


def wave_time_probe(env: Environment, y_list, t_grid, eps: float, opts: IntegratorOpts | None = None,
                    tprime_grid=None) -> WaveTimeReport:
    """For each tested ``(y, t)`` with ``w^y(t, 0) >= eps``, the smallest tested
    ``t'`` such that ``w^y(t + s, 0) >= 1 - eps`` for every tested ``s >= t'``."""
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    opts = opts or IntegratorOpts()
    t_grid = np.asarray(sorted(t_grid), dtype=np.float64)
    tp = np.asarray(tprime_grid if tprime_grid is not None else np.arange(0.0, 20.0001, 0.25))
    all_t = np.unique(np.round(np.add.outer(t_grid, tp).ravel(), 12))
    w = front_values(env, 0, y_list, all_t, opts)
    idx = {round(float(t), 12): k for k, t in enumerate(all_t)}
    rep = WaveTimeReport(eps)
    for i, y in enumerate(y_list):
        for t in t_grid:
            if w[i, idx[round(float(t), 12)]] < eps:
                continue
            vals = np.array([w[i, idx[round(float(t + s), 12)]] for s in tp])
            bad = np.flatnonzero(vals < 1 - eps)
            if bad.size == 0:
                rep.rows.append((int(y), float(t), float(tp[0])))
            elif bad[-1] + 1 < tp.size:
                rep.rows.append((int(y), float(t), float(tp[bad[-1] + 1])))
            else:
                rep.rows.append((int(y), float(t), None))
    return rep


@dataclass
class WaveDeltaReport:
    v: float
    u: float
    deltas: list[int]
    holds: dict[int, bool]
    min_gap: dict[int, float]  # min over (y, t) of w^y(t, z) - w^{y+D}(t+u, z)

    @property
    def delta_min(self) -> int | None:
        good = [d for d in self.deltas if self.holds[d]]
        return min(good) if good else None


def wave_delta_probe(env: Environment, y_list, t_grid, v: float, u: float, deltas,
                     opts: IntegratorOpts | None = None) -> WaveDeltaReport:
    """Empirical scan of shifts ``D`` with ``w^y(t, z) >= w^{y+D}(t+u, z)``, ``z = floor(y - v t)``."""
    opts = opts or IntegratorOpts()
    t_grid = np.asarray(sorted(t_grid), dtype=np.float64)
    y_list = np.asarray(y_list, dtype=np.int64)
    deltas = [int(d) for d in deltas]
    all_y = np.unique(np.concatenate([y_list] + [y_list + d for d in deltas]))
    all_t = np.unique(np.concatenate([t_grid, t_grid + u]))
    zs = [math.floor(y - v * t) for y in y_list for t in t_grid]
    L = opts.window_margin if opts.window_margin is not None else required_halfwidth(env.es, float(all_t[-1]), opts.tol)
    lo = min(min(zs), int(all_y.min())) - L
    hi = max(max(zs), int(all_y.max())) + L
    env.require(lo, hi)
    fields = front_fields(env, all_y, all_t, (lo, hi), opts)
    yi = {int(y): k for k, y in enumerate(all_y)}
    ti = {round(float(t), 12): k for k, t in enumerate(all_t)}
    holds, gaps = {}, {}
    for d in deltas:
        g = math.inf
        for y in y_list:
            for t in t_grid:
                z = math.floor(y - v * t) - lo
                a = fields[yi[int(y)], ti[round(float(t), 12)], z]
                b = fields[yi[int(y) + d], ti[round(float(t + u), 12)], z]
                g = min(g, a - b)
        holds[d] = bool(g >= -opts.zero_tol)
        gaps[d] = float(g)
    return WaveDeltaReport(v, u, deltas, holds, gaps)
