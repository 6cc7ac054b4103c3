"""Independent reference computations used by the tests.

None of these call into the code under test except to read inputs.  Values
that are expensive or that come from a different numerical method are frozen
below together with the recipe that produced them.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import linalg

# P_0(X_2 = y), y = 0, 1, 2: scipy.linalg.expm of the generator on [-60, 60]
HEAT_T2 = (0.3085083225536732, 0.21526928924893549, 0.09323903330473443)
# E_0[exp(int_0^2 xi(X_s) ds); X_2 = y] for the seed-7 environment on [-120, 120]
# (two-point 1/2), expm of (1/2 Lap + diag xi) on [-60, 60]
FK_ENV7_T2 = {1: 5.067039748343151, 0: 3.121497986948194}
# w^2(3, 0) for the same environment: scipy DOP853, rtol 1e-12, window [-80, 80]
FRONT_ENV7_Y2_T3 = 0.6931106987825134
# F-KPP from w0 = 0.3 delta_0 + 0.8 delta_2, value at (t, x) = (2, 0), same solver
MCKEAN_ENV7_T2 = 0.6275653540936538


def generator_matrix(n: int) -> np.ndarray:
    """``1/2`` discrete Laplacian minus identity rate on ``n`` sites, zero outside."""
    return -np.eye(n) + 0.5 * (np.eye(n, k=1) + np.eye(n, k=-1))


def expm_solution(u0: np.ndarray, potential: np.ndarray, t: float) -> np.ndarray:
    """``exp(t (1/2 Lap - diag(potential))) u0`` with zero exterior values."""
    return linalg.expm(t * (generator_matrix(u0.size) - np.diag(potential))) @ u0


def brute_sigma(values, tol: float = 0.0) -> int:
    """Longest strictly alternating subsequence minus one, by enumeration."""
    v = [x for x in values]
    best = 0
    n = len(v)
    for r in range(2, n + 1):
        for idx in itertools.combinations(range(n), r):
            if all(v[idx[i]] * v[idx[i + 1]] < 0 and abs(v[idx[i]]) > tol and abs(v[idx[i + 1]]) > tol
                   for i in range(r - 1)):
                best = max(best, r - 1)
    return best


def brute_subsequence(a, b) -> bool:
    """``a`` is a subsequence of ``b``, by enumerating index subsets."""
    return any(tuple(b[i] for i in idx) == tuple(a) for idx in itertools.combinations(range(len(b)), len(a)))


def z_closed(g: float) -> float:
    return 1.0 - g - math.sqrt(g * (g - 2.0))


def z_linear_solve(zeta: np.ndarray, eta: float, x_index: int) -> float:
    """``E_x[exp(int_0^{H_{x+1}} (zeta + eta) ds)]`` by a linear solve on the sites left of ``x + 1``.

    ``zeta[k]`` is the value at the k-th site; the walk is absorbed with
    weight 1 at ``x_index + 1`` and with weight 0 left of site 0, which is
    harmless once that boundary is many decay lengths away.
    """
    n = x_index + 1
    lam = 1.0 - zeta[:n] - eta
    a = np.diag(lam) - 0.5 * (np.eye(n, k=1) + np.eye(n, k=-1))
    b = np.zeros(n)
    b[-1] = 0.5
    return float(np.linalg.solve(a, b)[-1])


def meeting_probability(kappa: float, d: int, d_max: int = 200) -> float:
    """Two opposite particles at distance ``d``, each killed at rate ``kappa``: chance they meet.

    The distance moves by one at rate 2 and the pair loses a member at rate
    ``2 kappa``, so ``P(d) = (P(d - 1) + P(d + 1)) / (2 + 2 kappa)``, ``P(0) = 1``.
    Solved as a linear system truncated at ``d_max``.
    """
    n = d_max
    a = (2 + 2 * kappa) * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    b = np.zeros(n)
    b[0] = 1.0
    return float(np.linalg.solve(a, b)[d - 1])
