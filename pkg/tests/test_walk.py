import math

import numpy as np
import pytest

from brwkit.env import Environment
from brwkit.potential import ConstantPotential, PiecewisePotential
from brwkit.walk import (
    CEMETERY, chernoff_halfwidth, feynman_kac_mc, heat_kernel, hitting_time, sample_killed_walks,
    shift_potential, simulate_killed_walk, simulate_srw, srw_endpoints,
)
from oracles import FK_ENV7_T2, HEAT_T2, expm_solution


def test_heat_kernel_matches_matrix_exponential():
    # oracle: expm of the generator on a wide box
    assert np.allclose(heat_kernel(np.array([0, 1, 2]), 2.0), HEAT_T2, rtol=0, atol=1e-12)
    assert heat_kernel(-1, 2.0) == pytest.approx(HEAT_T2[1], abs=1e-12)


def test_heat_kernel_sums_to_one():
    y = np.arange(-200, 201)
    assert heat_kernel(y, 7.5).sum() == pytest.approx(1.0, abs=1e-12)


def test_srw_path_structure():
    tr = simulate_srw(3, 10.0, 0)
    xs = [tr.start] + [y for _, y in tr.events]
    assert all(abs(a - b) == 1 for a, b in zip(xs, xs[1:]))
    assert all(s < 10.0 for s, _ in tr.events)
    assert tr.lifetime is None
    assert tr.position_at(0.0) == 3
    assert sum(b - a for _, a, b in tr.sojourns()) == pytest.approx(10.0)


def test_hitting_time():
    tr = simulate_srw(0, 50.0, 1)
    for y in (0, 1, -1):
        h = hitting_time(tr, y)
        if h is not None:
            assert tr.position_at(h) == y
            assert all(x != y for s, x in tr.events if s < h) or y == 0


def test_integral_constant():
    tr = simulate_srw(0, 4.0, 2)
    assert tr.integral(ConstantPotential(0.7)) == pytest.approx(2.8)


def test_srw_endpoint_law():
    ends = srw_endpoints(0, 2.0, 200_000, 5)
    for y, p in zip((0, 1, 2), HEAT_T2):
        f = np.mean(ends == y)
        assert abs(f - p) < 4 * math.sqrt(p * (1 - p) / ends.size)


def test_killed_walk_dies_and_trajectory_ends_in_cemetery():
    tr = simulate_killed_walk(ConstantPotential(1.0), 0, 4)
    assert tr.lifetime is not None
    assert tr.events[-1][1] is CEMETERY
    assert str(CEMETERY) != "0"


def test_killed_walk_rejects_nonpositive_rate():
    with pytest.raises(ValueError, match="bounded below"):
        simulate_killed_walk(ConstantPotential(0.0), 0, 0)
    with pytest.raises(ValueError):
        sample_killed_walks(PiecewisePotential.from_sites([1.0, -0.1, 1.0], -1), 0, 1.0, 10, 0)


def test_killed_survival_constant_rate():
    # exact: survival under constant rate c is exp(-c t)
    s = sample_killed_walks(ConstantPotential(0.8), 0, 1.5, 100_000, 7)
    target = math.exp(-1.2)
    assert s.survival().within(target, 4)
    assert s.survival_fk().value == pytest.approx(target, abs=1e-12)


def test_killed_survival_inhomogeneous_matches_expm():
    k = 1.0 + 0.5 * (np.arange(-40, 41) % 3)
    kappa = PiecewisePotential.from_sites(k, -40)
    s = sample_killed_walks(kappa, 0, 1.0, 100_000, 8)
    target = expm_solution(np.ones(k.size), k, 1.0)[40]
    assert s.survival().within(target, 4)
    assert s.survival_fk().within(target, 4)


def test_shift_potential():
    kappa = PiecewisePotential.from_sites([-1.0, 0.5, 2.0], 0)
    shifted, c = shift_potential(kappa)
    assert c > 0 and shifted.lo > 0
    assert shifted(0.0, 0) == pytest.approx(-1.0 + 2 * c)


def test_chernoff_halfwidth_grows():
    assert chernoff_halfwidth(0.0, 1.0) < chernoff_halfwidth(0.0, 10.0) < chernoff_halfwidth(2.0, 10.0)
    assert chernoff_halfwidth(-5.0, 1.0) == chernoff_halfwidth(0.0, 1.0)


@pytest.mark.parametrize("y", [0, 1])
def test_feynman_kac_mc_matches_expm(env7, y):
    # oracle: expm on [-60, 60]
    est = feynman_kac_mc(env7, 0, y, 2.0, 200_000, 3)
    assert est.within(FK_ENV7_T2[y], 4)


def test_feynman_kac_mc_window_error():
    env = Environment.constant(1.0, -3, 3)
    with pytest.raises(Exception, match="window"):
        feynman_kac_mc(env, 0, 0, 5.0, 10, 0)


def test_trajectory_csv(tmp_path):
    tr = simulate_killed_walk(ConstantPotential(2.0), 0, 9)
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "time,site"
    assert lines[-1].endswith("DEAD")
