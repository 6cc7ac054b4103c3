"""Zero-crossing count, compressed sign sequences and the substring order."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .fkpp import IntegratorOpts, LatticeField, solve_linear

SignSeq = tuple[int, ...]

DEFAULT_ZERO_TOL = 1e-12
HARD_FACTOR = 100.0


def _values(f) -> np.ndarray:
    if isinstance(f, LatticeField):
        return f.values
    return np.asarray(f, dtype=np.float64)


def compress(f, zero_tol: float = DEFAULT_ZERO_TOL) -> SignSeq:
    """Signs of the maximal nonzero runs of ``f``; entries with ``|f| <= zero_tol`` are zeros."""
    v = _values(f)
    s = np.sign(v[np.abs(v) > zero_tol]).astype(np.int64)
    if s.size == 0:
        return ()
    keep = np.concatenate([[True], s[1:] != s[:-1]])
    return tuple(int(x) for x in s[keep])


def sigma(seq: SignSeq) -> int:
    """Crossing count of an already compressed sign sequence."""
    return max(len(seq) - 1, 0)


def count_crossings(f, zero_tol: float = DEFAULT_ZERO_TOL) -> int:
    """Number of sign changes of ``f`` on its stored window, ignoring dead-zone entries."""
    return sigma(compress(f, zero_tol))


def is_substring(a: SignSeq, b: SignSeq) -> bool:
    """True iff ``a`` is obtained from ``b`` by deleting entries."""
    it = iter(b)
    return all(any(x == y for y in it) for x in a)


def interface(u, zero_tol: float = DEFAULT_ZERO_TOL) -> tuple[int | None, int | None] | None:
    """Indices ``(a, b)`` of the last negative and first positive entry, or ``None``.

    Returns ``None`` unless the negative entries form one block, the positive
    entries form one block, and the negatives lie to the left.  Either index
    is ``None`` when that sign is absent.  Blocks are not required to touch
    the window edge: dead-zoned tails of a ray show up as zeros.
    """
    v = _values(u)
    neg = np.flatnonzero(v < -zero_tol)
    pos = np.flatnonzero(v > zero_tol)
    for idx in (neg, pos):
        if idx.size and idx[-1] - idx[0] + 1 != idx.size:
            return None
    a = int(neg[-1]) if neg.size else None
    b = int(pos[0]) if pos.size else None
    if a is not None and b is not None and a >= b:
        return None
    return a, b


def check_single_interface(u, zero_tol: float = DEFAULT_ZERO_TOL) -> bool:
    return interface(u, zero_tol) is not None


@dataclass
class CrossingsReport:
    times: list[float]
    sigma: list[int]
    ok: bool = True
    first_violation: dict | None = None
    zero_tol: float = DEFAULT_ZERO_TOL
    extra: dict = field(default_factory=dict)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(asdict(self), indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text


def monotone_report(fields: list[LatticeField], zero_tol: float = DEFAULT_ZERO_TOL) -> CrossingsReport:
    """Check that the crossing count is non-increasing along ``fields``.

    A step ``k-1 -> k`` is a violation only if the count at ``k`` with the
    stricter threshold ``100 * zero_tol`` still exceeds the count at ``k-1``
    with the ordinary threshold.
    """
    soft = [count_crossings(f, zero_tol) for f in fields]
    rep = CrossingsReport([f.time for f in fields], soft, zero_tol=zero_tol)
    for k in range(1, len(fields)):
        hard = count_crossings(fields[k], HARD_FACTOR * zero_tol)
        if hard > soft[k - 1]:
            rep.ok = False
            rep.first_violation = {
                "index": k,
                "t_before": fields[k - 1].time,
                "t_after": fields[k].time,
                "sigma_before": soft[k - 1],
                "sigma_after": hard,
                "window": [fields[k].window_lo, fields[k].window_hi],
                "before": fields[k - 1].values.tolist(),
                "after": fields[k].values.tolist(),
            }
            break
    return rep


def check_monotone_crossings(u0: LatticeField, kappa, t_grid, opts: IntegratorOpts | None = None) -> CrossingsReport:
    """Integrate the linear equation from ``u0`` and audit the crossing counts at ``t_grid``."""
    opts = opts or IntegratorOpts()
    t_grid = sorted(float(t) for t in t_grid)
    fields = solve_linear(u0, kappa, t_grid, opts) if t_grid else []
    return monotone_report(fields, opts.zero_tol)
