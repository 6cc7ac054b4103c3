import json
import math

import numpy as np
import pytest

from brwkit.brwre import (
    CapRateError, counts, estimate_max_cdf, growth_check, max_position, mckean_functional, mean_counts,
    run_ensemble, simulate,
)
from brwkit.env import Environment, WindowError
from brwkit.fkpp import LatticeField
from oracles import FK_ENV7_T2, FRONT_ENV7_Y2_T3, MCKEAN_ENV7_T2


def test_single_system_bookkeeping(env7):
    s = simulate(env7, 0, 2.0, seed=3)
    assert not s.capped
    assert s.population == 1 + s.branch_times.size
    assert s.population_at(0.0) == 1 and s.population_at(2.0) == s.population
    assert max_position(s) == s.positions.max()
    n_at, n_geq = counts(s, 0)
    assert n_at == np.sum(s.positions == 0) and n_geq == np.sum(s.positions >= 0)
    assert json.loads(s.to_json())["population"] == s.population


def test_cap_is_flagged(env7):
    s = simulate(env7, 0, 5.0, cap=5, seed=0)
    assert s.capped and s.population <= 5
    with pytest.raises(ValueError):
        max_position(s)
    ens = run_ensemble(env7, 0, 5.0, 50, 0, cap=5)
    assert ens.n_capped > 0
    with pytest.raises(CapRateError):
        ens.require_cap_rate()


def test_window_exit_raises():
    env = Environment.constant(1.0, -3, 3)
    with pytest.raises(WindowError, match="light cone"):
        run_ensemble(env, 0, 10.0, 20, 0)


def test_mean_population_constant_rate():
    # exact: E[population] = exp(c t) under constant branching rate c
    env = Environment.constant(1.0, -80, 80)
    mc = mean_counts(env, 0, 0, 2.0, 40_000, 1)
    assert mc.population.estimate.within(math.exp(2.0), 4)


@pytest.mark.parametrize("y", [0, 1])
def test_many_to_one(env7, y):
    # oracle: E[N(t, y)] equals the Feynman-Kac value from expm
    mc = mean_counts(env7, 0, y, 2.0, 40_000, 2 + y)
    assert mc.n_at.estimate.within(FK_ENV7_T2[y], 4)
    assert mc.n_at.n_capped == 0


def test_duality_single_point(env7):
    # oracle: P_0(M(3) >= 2) against the DOP853 front value
    est = estimate_max_cdf(env7, 0, 2, 3.0, 20_000, 5)
    assert est.estimate.within(FRONT_ENV7_Y2_T3, 4)


def test_mckean_functional(env7):
    w0 = LatticeField.from_sites({0: 0.3, 2: 0.8}, (-5, 5))
    est = mckean_functional(env7, 0, w0, 2.0, 20_000, 6)
    assert est.estimate.within(MCKEAN_ENV7_T2, 4)


def test_ensemble_csv(env7, tmp_path):
    ens = run_ensemble(env7, 0, 1.0, 10, 0)
    p = tmp_path / "e.csv"
    ens.to_csv(p, {"seed": 0})
    lines = p.read_text().splitlines()
    assert lines[0] == "run,t,M,population,capped,seed" and len(lines) == 11


def test_growth_rows(env7):
    rows = growth_check(env7, 0, [2.0, 4.0], 200, 0)
    assert [r.t for r in rows] == [2.0, 4.0]
    assert all(0 <= r.frequency <= 1 for r in rows)
