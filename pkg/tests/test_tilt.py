import math

import numpy as np
import pytest

from brwkit.env import DistSpec, WindowError, sample_environment
from brwkit.tilt import (
    TiltParams, build_tilted_chain, coupled_triple, empirical_speed, expected_hit_one,
    hitting_order_check, sample_tilted, simulate_tilted, solve_eta_bar, speed_homogeneous,
    velocity_constants, z_homogeneous, z_mc,
)
from oracles import z_closed, z_linear_solve


def test_homogeneous_closed_forms():
    for gamma, eta in [(0.0, -1.0), (-1.0, -0.5), (-0.3, -0.2)]:
        g = gamma + eta
        z = z_homogeneous(gamma, eta)
        assert z == pytest.approx(z_closed(g))
        # Z solves Z + 1/Z = 2 (1 - g) with Z < 1
        assert z + 1 / z == pytest.approx(2 * (1 - g))
        assert 0 < z < 1
        assert speed_homogeneous(gamma, eta) == pytest.approx(math.sqrt(g * (g - 2)))
    with pytest.raises(ValueError):
        z_homogeneous(0.5, -1.0)


def test_homogeneous_chain_is_constant():
    p = TiltParams.homogeneous(-0.5, -0.5, (-100, 100))
    ch = build_tilted_chain(p, (-20, 20))
    z = z_homogeneous(-0.5, -0.5)
    assert np.allclose(ch.z_right, z, rtol=1e-13)
    assert np.allclose(ch.p_right + ch.p_left, 1.0)
    assert np.allclose(ch.p_right, 1 / (2 * ch.lam * z))
    assert expected_hit_one(ch, 0) == pytest.approx(1 / speed_homogeneous(-0.5, -0.5), rel=1e-12)


def test_inhomogeneous_z_matches_linear_solve():
    # oracle: independent first-step linear system on a long left tail
    env = sample_environment(DistSpec("uniform", 1.0, 2.0), (-400, 40), 2)
    eta = -0.4
    p = TiltParams.from_environment(env, eta)
    ch = build_tilted_chain(p, (-10, 10))
    for x in (-10, 0, 7):
        k = x - env.window_lo
        assert ch.z_right[ch.index(x)] == pytest.approx(z_linear_solve(p.zeta, eta, k), rel=1e-10)


def test_expected_hitting_time_is_log_derivative():
    # oracle: tilted E_x[H_{x+1}] = d/d eta log Z_{x,x+1}
    env = sample_environment(DistSpec("two_point", 1.0, 2.0), (-400, 40), 5)
    eta, h = -0.7, 1e-5
    p = TiltParams.from_environment(env, eta)
    ch = build_tilted_chain(p, (-5, 5))
    for x in (-5, 0, 5):
        k = x - env.window_lo
        d = (math.log(z_linear_solve(p.zeta, eta + h, k)) - math.log(z_linear_solve(p.zeta, eta - h, k))) / (2 * h)
        assert expected_hit_one(ch, x) == pytest.approx(d, rel=1e-6)


def test_chain_window_checks():
    p = TiltParams.homogeneous(-0.5, -0.5, (0, 100))
    with pytest.raises(WindowError, match="burn-in"):
        build_tilted_chain(p, (10, 20))
    with pytest.raises(ValueError, match="no drift"):
        build_tilted_chain(TiltParams.homogeneous(0.0, 0.0, (-100, 100), delta=1.0), (0, 5))
    with pytest.raises(ValueError):
        TiltParams(-1.0, np.array([0.5]), 0, 1.0)


def test_z_mc_homogeneous():
    est = z_mc(-0.3, -0.2, 0, 1, 100_000, 0)
    assert abs(est.value - z_homogeneous(-0.3, -0.2)) <= 4 * est.std_error + est.bias_bound
    est2 = z_mc(-0.3, -0.2, 0, 2, 100_000, 1)
    assert abs(est2.value - z_homogeneous(-0.3, -0.2) ** 2) <= 4 * est2.std_error + est2.bias_bound


def test_z_mc_inhomogeneous_against_chain():
    env = sample_environment(DistSpec("uniform", 1.0, 2.0), (-200, 10), 3)
    p = TiltParams.from_environment(env, -0.5)
    ch = build_tilted_chain(p, (-2, 2))
    est = z_mc(p.zeta, -0.5, 0, 1, 100_000, 4, zeta_lo=env.window_lo)
    assert abs(est.value - ch.z_right[ch.index(0)]) <= 4 * est.std_error + est.bias_bound


def test_tilted_speed_homogeneous():
    p = TiltParams.homogeneous(-1.0, -0.5, (-3000, 3000))
    ch = build_tilted_chain(p, (-2900, 2900))
    est = empirical_speed(ch, 0, 100.0, 2000, 0)
    assert est.within(speed_homogeneous(-1.0, -0.5), 4)


def test_single_path_and_batch():
    p = TiltParams.homogeneous(-1.0, -1.0, (-200, 200))
    ch = build_tilted_chain(p, (-100, 100))
    tr = simulate_tilted(ch, 0, 5.0, 1)
    assert all(abs(b - a) == 1 for a, b in zip([0] + [y for _, y in tr.events], [y for _, y in tr.events]))
    s = sample_tilted(ch, 0, 3, 20.0, 500, 2)
    hit = np.isfinite(s.hits)
    assert np.all(s.ends[hit] == 3)
    with pytest.raises(WindowError):
        simulate_tilted(ch, 500, 1.0, 0)


def test_eta_bar_homogeneous():
    # exact: with zeta = 0 the speed sqrt(3) is reached at eta = -1
    r = solve_eta_bar(0.0, math.sqrt(3.0))
    assert r.eta_bar == pytest.approx(-1.0, abs=1e-8)
    assert abs(r.residual) < 1e-8
    r2 = solve_eta_bar(-0.5, speed_homogeneous(-0.5, -2.0))
    assert r2.eta_bar == pytest.approx(-2.0, abs=1e-8)
    with pytest.raises(ValueError, match="critical"):
        solve_eta_bar(0.0, 1.0, delta=1.0)


def test_eta_bar_decreases_with_speed():
    env = sample_environment(DistSpec("two_point", 1.0, 2.0), (0, 5000), 9)
    p = TiltParams.from_environment(env, -1.0)
    a = solve_eta_bar(p.zeta, 2.0).eta_bar
    b = solve_eta_bar(p.zeta, 3.0).eta_bar
    assert b < a < 0


def test_velocity_constants_homogeneous():
    vc = velocity_constants(0.0, 2.0, delta=1.0)
    assert vc.v1 == 4.0
    assert vc.v2 == pytest.approx(speed_homogeneous(0.0, -10.0))
    assert vc.vc_upper == pytest.approx(math.sqrt(3.0))


def test_coupled_triple_is_ordered():
    env = sample_environment(DistSpec("uniform", 1.0, 2.0), (-2000, 2000), 1)
    p = TiltParams.from_environment(env, -0.5)
    for s in range(20):
        tr = coupled_triple(p, 0, 300, 50.0, s)
        assert tr.violations() == {"Y": 0, "N": 0}
        c = tr.counts(3.0)
        assert c[0] <= c[1] <= c[2]
        pos = tr.position_at(3.0)
        assert len(tr.trajectories()) == 3 and pos.shape == (3,)


def test_hitting_order_modes():
    env = sample_environment(DistSpec("uniform", 1.0, 2.0), (-2000, 2000), 1)
    p = TiltParams.from_environment(env, -1.0)
    ind = hitting_order_check(p, 0, 3, [1.0, 3.0], 2000, 0, "independent")
    cpl = hitting_order_check(p, 0, 3, [1.0, 3.0], 300, 0, "coupled")
    assert ind.ok and cpl.ok and cpl.violations == 0
    for k in range(2):
        assert cpl.cdf[0][k].value <= cpl.cdf[1][k].value <= cpl.cdf[2][k].value
    with pytest.raises(ValueError):
        hitting_order_check(p, 0, 3, [1.0], 10, 0, "other")
