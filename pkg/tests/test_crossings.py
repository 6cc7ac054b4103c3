import json

import numpy as np
import pytest

from brwkit.crossings import (
    check_monotone_crossings, check_single_interface, compress, count_crossings, interface,
    is_substring, monotone_report, sigma,
)
from brwkit.fkpp import IntegratorOpts, LatticeField
from brwkit.potential import ConstantPotential, PiecewisePotential
from oracles import brute_sigma, brute_subsequence


def test_compress_and_sigma():
    assert compress([0, 1, 2, 0, -1, 1e-15, -3, 4]) == (1, -1, 1)
    assert compress([]) == ()
    assert compress([1e-13, -1e-13]) == ()
    assert sigma(()) == 0 and sigma((1,)) == 0 and sigma((1, -1, 1)) == 2
    assert count_crossings([1, -1, 1, -1]) == 3


def test_dead_zone_threshold():
    f = [1.0, -5e-7, 1.0]
    assert count_crossings(f, 1e-12) == 2
    assert count_crossings(f, 1e-6) == 0


def test_count_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        f = rng.choice([-2.0, -1.0, 0.0, 1.0, 3.0], size=rng.integers(0, 9))
        assert count_crossings(f) == brute_sigma(f)


def test_substring():
    assert is_substring((), (1, -1))
    assert is_substring((1, 1), (1, -1, 1))
    assert not is_substring((-1, 1, -1), (1, -1, 1))
    assert is_substring((1, -1), (1, -1))
    rng = np.random.default_rng(1)
    for _ in range(300):
        a = tuple(rng.choice([-1, 1], size=rng.integers(0, 4)))
        b = tuple(rng.choice([-1, 1], size=rng.integers(0, 6)))
        assert is_substring(a, b) == brute_subsequence(a, b)


def test_interface():
    assert interface([-1, -1, 0, 2, 3]) == (1, 3)
    assert interface([-1, 0, 0]) == (0, None)
    assert interface([0, 0]) == (None, None)
    assert interface([1, -1]) is None
    assert interface([-1, 1, -1]) is None
    assert interface([-1, 0, -1, 1]) is None
    assert check_single_interface([0, -1e-14, 1])


def test_heat_flow_decreases_crossings():
    # property: crossings never increase under the linear flow
    u0 = LatticeField(-3, 3, np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]))
    rep = check_monotone_crossings(u0, ConstantPotential(1.0), np.linspace(0.05, 3.0, 60))
    assert rep.ok and rep.first_violation is None
    assert rep.sigma[0] <= 6
    assert all(a >= b for a, b in zip(rep.sigma, rep.sigma[1:]))
    assert rep.sigma[-1] < 6


def test_inhomogeneous_time_dependent_potential():
    rng = np.random.default_rng(3)
    for trial in range(5):
        vals = rng.uniform(-1, 2, size=(3, 81))
        kappa = PiecewisePotential([0.4, 1.1], vals, -40)
        u0 = LatticeField(-6, 6, rng.choice([-1.0, 0.0, 1.0], size=13))
        rep = check_monotone_crossings(u0, kappa, np.linspace(0.05, 2.0, 40), IntegratorOpts(dt=0.01))
        assert rep.ok, rep.first_violation


def test_report_flags_artificial_increase():
    fields = [LatticeField(0, 2, np.array([1.0, 1.0, 1.0]), time=0.0),
              LatticeField(0, 2, np.array([1.0, -1.0, 1.0]), time=1.0)]
    rep = monotone_report(fields)
    assert not rep.ok
    assert rep.first_violation["index"] == 1 and rep.first_violation["sigma_after"] == 2
    doc = json.loads(rep.to_json())
    assert doc["ok"] is False


def test_report_ignores_dead_zone_noise():
    fields = [LatticeField(0, 2, np.array([1.0, 0.0, 1.0]), time=0.0),
              LatticeField(0, 2, np.array([1.0, -5e-12, 1.0]), time=1.0)]
    assert monotone_report(fields).ok
