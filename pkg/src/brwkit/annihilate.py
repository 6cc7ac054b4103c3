"""Signed killed random walks that annihilate in opposite-sign pairs.

Each particle is a rate-one walk killed at rate ``kappa(t, x)``.  When a
particle jumps onto a site holding alive particles of the opposite sign, it
annihilates with the one of smallest index; both are frozen at that site.
Killed particles go to the cemetery, which carries no sign information.

All alive particles share one event clock of rate ``n_alive * (1 + kappa_hi)``:
each event picks a uniform alive particle and is a jump with probability
``1 / (1 + kappa_hi)``, otherwise a kill proposal accepted with probability
``kappa(t, x) / kappa_hi``.
"""
from __future__ import annotations

import csv
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._kernels import core
from .crossings import compress, is_substring, sigma
from .env import WindowError
from .fkpp import LatticeField, integrate_linear
from .potential import Potential, as_potential
from .rng import as_generator
from .walk import chernoff_halfwidth

CEMETERY = int(_kernels.CEMETERY)
ALIVE, DEAD, ANNIHILATED = 0, 1, 2
JUMP, DEATH, ANNIHILATE = _kernels.JUMP, _kernels.DEATH, _kernels.ANNIHILATE
KIND_NAMES = {JUMP: "jump", DEATH: "death", ANNIHILATE: "annihilate"}


@dataclass(frozen=True, eq=False)
class SignedConfig:
    """Particle ``i`` (0-based array slot, reported index ``i + 1``)."""

    position: np.ndarray  # site, or CEMETERY for killed particles
    sign: np.ndarray  # +1 / -1
    state: np.ndarray  # ALIVE, DEAD or ANNIHILATED
    frozen_at: np.ndarray  # nan while alive
    time: float = 0.0

    @property
    def n(self) -> int:
        return int(self.sign.size)

    @property
    def alive(self) -> np.ndarray:
        return self.state == ALIVE

    @property
    def particles(self) -> list[tuple[int, int | None, int, bool, float | None]]:
        """``(index, position or None for the cemetery, sign, alive, frozen_at or None)``."""
        out = []
        for i in range(self.n):
            p = int(self.position[i])
            f = float(self.frozen_at[i])
            out.append((i + 1, None if p == CEMETERY else p, int(self.sign[i]),
                        bool(self.state[i] == ALIVE), None if np.isnan(f) else f))
        return out

    def check(self) -> None:
        """Raise ``AssertionError`` if a structural invariant fails."""
        a = self.alive
        pos, sg = self.position[a], self.sign[a]
        plus = set(pos[sg > 0].tolist())
        minus = set(pos[sg < 0].tolist())
        clash = plus & minus
        assert not clash, f"opposite alive signs share site(s) {sorted(clash)}"
        ann = self.state == ANNIHILATED
        assert int(self.sign[ann].sum()) == 0, "annihilated particles are not balanced in sign"
        assert np.all(self.position[self.state == DEAD] == CEMETERY)

    def sign_sequence(self) -> tuple[int, ...]:
        return compress(_site_masses(self)[1])


def _site_masses(cfg: SignedConfig) -> tuple[np.ndarray, np.ndarray]:
    a = cfg.alive
    pos = cfg.position[a]
    if pos.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    sites, inv = np.unique(pos, return_inverse=True)
    mass = np.zeros(sites.size)
    np.add.at(mass, inv, cfg.sign[a].astype(np.float64))
    return sites, mass


def init_from_measure(u0: LatticeField, n: int, seed) -> SignedConfig:
    """``n`` particles i.i.d. from ``|u0| / ||u0||_1``, each with the sign of ``u0`` at its site."""
    w = np.abs(u0.values)
    total = w.sum()
    if not total > 0:
        raise ValueError("u0 is identically zero")
    gen = as_generator(seed, "annihilate_init")
    idx = gen.choice(w.size, size=int(n), p=w / total)
    pos = (u0.window_lo + idx).astype(np.int64)
    sign = np.sign(u0.values[idx]).astype(np.int8)
    return SignedConfig(pos, sign, np.zeros(n, dtype=np.int8), np.full(n, np.nan), 0.0)


class Step(NamedTuple):
    time: float
    config: SignedConfig
    kind: int | None  # None for the initial configuration
    index: int  # 0-based particle slot, -1 for the initial configuration


@dataclass
class AnnihilationRun:
    initial: SignedConfig
    final: SignedConfig
    ev_time: np.ndarray
    ev_index: np.ndarray  # 0-based
    ev_kind: np.ndarray
    ev_site: np.ndarray
    ev_partner: np.ndarray  # -1 unless annihilation
    t_max: float

    @property
    def n_events(self) -> int:
        return int(self.ev_time.size)

    def path(self) -> Iterator[Step]:
        """The piecewise-constant configuration path: initial state, then one step per event."""
        pos = self.initial.position.copy()
        state = self.initial.state.copy()
        frozen = self.initial.frozen_at.copy()
        sign = self.initial.sign
        yield Step(0.0, self.initial, None, -1)
        for t, i, k, x, p in zip(self.ev_time.tolist(), self.ev_index.tolist(), self.ev_kind.tolist(),
                                 self.ev_site.tolist(), self.ev_partner.tolist()):
            if k == JUMP:
                pos[i] = x
            elif k == DEATH:
                pos[i] = CEMETERY
                state[i] = DEAD
                frozen[i] = t
            else:
                pos[i] = x
                state[i] = state[p] = ANNIHILATED
                frozen[i] = frozen[p] = t
            yield Step(t, SignedConfig(pos.copy(), sign, state.copy(), frozen.copy(), t), k, i)

    def to_csv(self, path: str | Path) -> None:
        """Event log: time, particle index (1-based), event kind, site."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "particle", "kind", "site"])
            for t, i, k, x in zip(self.ev_time.tolist(), self.ev_index.tolist(),
                                  self.ev_kind.tolist(), self.ev_site.tolist()):
                w.writerow([repr(t), i + 1, KIND_NAMES[k], x])


def _table(kappa: Potential, lo: int, hi: int, t: float):
    plo = getattr(kappa, "window_lo", None)
    if plo is not None:
        lo, hi = kappa.window_lo, kappa.window_hi
    b, v = kappa.table(lo, hi)
    return lo, np.ascontiguousarray(b), np.ascontiguousarray(v)


def evolve(config: SignedConfig, kappa, t: float, seed) -> AnnihilationRun:
    """Run the annihilating system from ``config`` for time ``t``."""
    kappa = as_potential(kappa)
    if not kappa.lo > 0:
        raise ValueError(
            f"killing rate must be bounded below by a positive constant, got lower bound {kappa.lo}"
        )
    if np.any(config.state != ALIVE):
        raise ValueError("evolve starts from an all-alive configuration")
    config.check()
    n = config.n
    width = chernoff_halfwidth(0.0, t, 1e-15 / max(n, 1))
    lo, b, v = _table(kappa, int(config.position.min()) - width, int(config.position.max()) + width, t)
    gen = as_generator(seed, "annihilate")
    out = core.annihilate(b, v, lo, float(kappa.hi), np.ascontiguousarray(config.position, dtype=np.int64),
                          np.ascontiguousarray(config.sign, dtype=np.int8), float(t), gen)
    if out[0] == _kernels.WINDOW_EXIT:
        raise WindowError(f"a particle left the potential window starting at {lo}")
    _, pos, state, frozen, et, ei, ek, ex, ep = out
    pos = pos.copy()
    pos[state == DEAD] = CEMETERY
    final = SignedConfig(pos, config.sign, state, frozen, float(t))
    return AnnihilationRun(config, final, et, ei, ek, ex, ep, float(t))


@dataclass
class SignedMeasure:
    window_lo: int
    mass: np.ndarray  # mass[k] at site window_lo + k
    cemetery: float  # signed mass of killed particles

    @property
    def window_hi(self) -> int:
        return self.window_lo + self.mass.size - 1

    def at(self, x: int) -> float:
        k = x - self.window_lo
        return float(self.mass[k]) if 0 <= k < self.mass.size else 0.0


def empirical_measure(config: SignedConfig, n: int | None = None) -> SignedMeasure:
    """``(1/n) sum over alive particles of sign * delta_position``; cemetery mass kept apart."""
    n = config.n if n is None else n
    sites, mass = _site_masses(config)
    cem = float(config.sign[config.state == DEAD].sum()) / n
    if sites.size == 0:
        return SignedMeasure(0, np.zeros(1), cem)
    lo = int(sites[0])
    dense = np.zeros(int(sites[-1]) - lo + 1)
    dense[sites - lo] = mass / n
    return SignedMeasure(lo, dense, cem)


def _dense(obj) -> tuple[int, np.ndarray]:
    if isinstance(obj, LatticeField):
        return obj.window_lo, obj.values
    return obj.window_lo, obj.mass


def weak_distance(mu, f) -> float:
    """``max_x |sum_{z <= x} (mu(z) - f(z))|`` over the union of both windows."""
    la, a = _dense(mu)
    lb, b = _dense(f)
    lo = min(la, lb)
    hi = max(la + a.size, lb + b.size)
    d = np.zeros(hi - lo)
    d[la - lo : la - lo + a.size] += a
    d[lb - lo : lb - lo + b.size] -= b
    return float(np.max(np.abs(np.cumsum(d)))) if d.size else 0.0


@dataclass
class AuditReport:
    n_steps: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _deletions(seq: tuple[int, ...], width: int) -> set[tuple[int, ...]]:
    """Compressed sequences reachable by deleting ``width`` consecutive entries of ``seq``."""
    out = {seq}
    for k in range(len(seq) - width + 1):
        out.add(compress(seq[:k] + seq[k + width:]))
    return out


def substring_audit(run: AnnihilationRun | Sequence[Step]) -> AuditReport:
    """Check every transition of a path against the sign-sequence law.

    Per transition: the new sign sequence is a substring of the old; a jump
    keeps it unchanged; a death deletes one entry (then recompresses); an
    annihilation deletes two adjacent entries; the alive sign balance moves
    only at deaths, by one; event times strictly increase.  The crossing
    count is non-increasing along the whole path.
    """
    steps = run.path() if isinstance(run, AnnihilationRun) else iter(run)
    rep = AuditReport()
    prev = next(steps, None)
    if prev is None:
        return rep
    s_prev = prev.config.sign_sequence()
    bal_prev = int(prev.config.sign[prev.config.alive].sum())
    for st in steps:
        rep.n_steps += 1
        cfg = st.config
        s_now = cfg.sign_sequence()
        bal = int(cfg.sign[cfg.alive].sum())
        problems = []
        if not st.time > prev.time:
            problems.append("event times not strictly increasing")
        if not is_substring(s_now, s_prev):
            problems.append("sign sequence is not a substring of the previous one")
        if st.kind == JUMP:
            if s_now != s_prev:
                problems.append("jump changed the sign sequence")
            if bal != bal_prev:
                problems.append("jump changed the sign balance")
        elif st.kind == DEATH:
            if s_now not in _deletions(s_prev, 1):
                problems.append("death did not remove a single sign")
            if abs(bal - bal_prev) != 1:
                problems.append("death did not change the sign balance by one")
        elif st.kind == ANNIHILATE:
            if s_now not in _deletions(s_prev, 1) | _deletions(s_prev, 2):
                problems.append("annihilation did not remove an adjacent sign pair")
            if bal != bal_prev:
                problems.append("annihilation changed the sign balance")
        else:
            problems.append(f"unknown event kind {st.kind!r}")
        if sigma(s_now) > sigma(s_prev):
            problems.append("crossing count increased")
        if problems:
            rep.violations.append({"time": st.time, "kind": st.kind, "index": st.index,
                                   "before": list(s_prev), "after": list(s_now), "problems": problems})
        prev, s_prev, bal_prev = st, s_now, bal
    return rep


def pde_solution(u0: LatticeField, kappa, t: float, opts=None) -> LatticeField:
    """``u(t, .)`` for the normalized initial data ``u0 / ||u0||_1``."""
    total = np.abs(u0.values).sum()
    u0n = replace(u0, values=u0.values / total)
    return integrate_linear(u0n, kappa, t, opts)
