"""Bounded i.i.d. random environments of branching rates."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import stream

FORMAT_VERSION = 1


class WindowError(ValueError):
    """A site outside the stored window was requested."""


class EnvironmentFormatError(ValueError):
    """Malformed or invalid environment file."""


@dataclass(frozen=True)
class DistSpec:
    """Law of a single rate.

    ``kind`` is ``"two_point"`` (value ``es`` with probability ``p``, else
    ``ei``) or ``"uniform"`` (continuous uniform on ``[ei, es]``).
    """

    kind: str
    ei: float
    es: float
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("two_point", "uniform"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not self.ei > 0:
            raise ValueError(f"ei must be positive, got {self.ei}")
        if self.ei > self.es:
            raise ValueError(f"need ei <= es, got ei={self.ei} es={self.es}")
        if self.kind == "two_point" and not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "ei": self.ei, "es": self.es}
        if self.kind == "two_point":
            d["p"] = self.p
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DistSpec:
        return cls(d["kind"], float(d["ei"]), float(d["es"]), float(d.get("p", 0.5)))


@dataclass(frozen=True, eq=False)
class Environment:
    window_lo: int
    window_hi: int
    rates: np.ndarray
    ei: float
    es: float
    seed: int | None = None
    dist_spec: DistSpec | None = None

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=np.float64)
        if self.window_lo > self.window_hi:
            raise ValueError("empty window")
        if rates.shape != (self.window_hi - self.window_lo + 1,):
            raise ValueError(
                f"expected {self.window_hi - self.window_lo + 1} rates, got shape {rates.shape}"
            )
        if not 0 < self.ei <= self.es:
            raise ValueError(f"need 0 < ei <= es, got ei={self.ei} es={self.es}")
        bad = np.flatnonzero((rates < self.ei) | (rates > self.es) | ~np.isfinite(rates))
        if bad.size:
            x = self.window_lo + int(bad[0])
            raise ValueError(f"rate {rates[bad[0]]} at site {x} outside [{self.ei}, {self.es}]")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def constant(cls, c: float, window_lo: int, window_hi: int) -> Environment:
        n = window_hi - window_lo + 1
        return cls(window_lo, window_hi, np.full(n, float(c)), c, c, None, DistSpec("uniform", c, c))

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    @property
    def delta(self) -> float:
        return self.es - self.ei

    def __len__(self) -> int:
        return self.rates.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Environment):
            return NotImplemented
        return (
            self.window_lo == other.window_lo
            and self.window_hi == other.window_hi
            and self.ei == other.ei
            and self.es == other.es
            and self.seed == other.seed
            and self.dist_spec == other.dist_spec
            and np.array_equal(self.rates, other.rates)
        )

    def covers(self, lo: int, hi: int) -> bool:
        return self.window_lo <= lo and hi <= self.window_hi

    def require(self, lo: int, hi: int) -> None:
        if not self.covers(lo, hi):
            raise WindowError(
                f"sites [{lo}, {hi}] requested but environment window is "
                f"[{self.window_lo}, {self.window_hi}]"
            )

    def rate(self, x: int) -> float:
        self.require(x, x)
        return float(self.rates[x - self.window_lo])

    def restrict(self, lo: int, hi: int) -> np.ndarray:
        """Rates on ``[lo, hi]`` (a view)."""
        self.require(lo, hi)
        return self.rates[lo - self.window_lo : hi - self.window_lo + 1]


def sample_environment(dist_spec: DistSpec, window: tuple[int, int], seed: int) -> Environment:
    """One independent draw per site of ``window``, deterministic in ``seed``."""
    lo, hi = window
    if lo > hi:
        raise ValueError(f"window_lo > window_hi: {window}")
    gen = stream(seed, "environment")
    u = gen.random(hi - lo + 1)
    if dist_spec.kind == "two_point":
        rates = np.where(u < dist_spec.p, dist_spec.es, dist_spec.ei)
    else:
        rates = dist_spec.ei + (dist_spec.es - dist_spec.ei) * u
        np.clip(rates, dist_spec.ei, dist_spec.es, out=rates)
    return Environment(lo, hi, rates, dist_spec.ei, dist_spec.es, seed, dist_spec)


def shifted_potential(env: Environment) -> tuple[np.ndarray, float]:
    """Return ``(zeta, delta)`` with ``zeta = xi - es`` and ``delta = es - ei``."""
    return env.rates - env.es, env.es - env.ei


def environment_to_dict(env: Environment) -> dict:
    return {
        "version": FORMAT_VERSION,
        "dist_spec": env.dist_spec.to_dict() if env.dist_spec else None,
        "window_lo": env.window_lo,
        "window_hi": env.window_hi,
        "seed": env.seed,
        "ei": env.ei,
        "es": env.es,
        "rates": env.rates.tolist(),
    }


def environment_from_dict(d: dict) -> Environment:
    if not isinstance(d, dict):
        raise EnvironmentFormatError("top-level JSON value must be an object")
    for name in ("version", "window_lo", "window_hi", "ei", "es", "rates"):
        if name not in d:
            raise EnvironmentFormatError(f"missing field {name!r}")
    if d["version"] != FORMAT_VERSION:
        raise EnvironmentFormatError(f"field 'version': unsupported value {d['version']!r}")
    try:
        spec = DistSpec.from_dict(d["dist_spec"]) if d.get("dist_spec") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise EnvironmentFormatError(f"field 'dist_spec': {exc}") from exc
    try:
        rates = np.asarray(d["rates"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise EnvironmentFormatError(f"field 'rates': {exc}") from exc
    try:
        return Environment(
            int(d["window_lo"]), int(d["window_hi"]), rates, float(d["ei"]), float(d["es"]),
            d.get("seed"), spec,
        )
    except ValueError as exc:
        raise EnvironmentFormatError(f"field 'rates': {exc}") from exc


def save_environment(env: Environment, path: str | Path) -> None:
    Path(path).write_text(json.dumps(environment_to_dict(env)))


def load_environment(path: str | Path) -> Environment:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvironmentFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return environment_from_dict(d)
