from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Estimate(NamedTuple):
    value: float
    std_error: float

    def within(self, target: float, k: float = 3.0, other_se: float = 0.0) -> bool:
        """|value - target| <= k * combined standard error."""
        se = float(np.hypot(self.std_error, other_se))
        return abs(self.value - target) <= k * se


def mean_estimate(samples) -> Estimate:
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        return Estimate(float(x.mean()) if x.size else float("nan"), float("nan"))
    return Estimate(float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size)))


def proportion_estimate(hits) -> Estimate:
    """Frequency with a standard error that stays positive at 0 and 1."""
    x = np.asarray(hits, dtype=np.float64)
    n = x.size
    p = float(x.mean())
    # one pseudo-count keeps the error bar from collapsing at 0 or 1
    q = (x.sum() + 0.5) / (n + 1.0)
    return Estimate(p, float(np.sqrt(q * (1 - q) / n)))
