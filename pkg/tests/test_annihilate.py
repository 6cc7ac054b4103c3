import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brwkit.annihilate import (
    ALIVE, ANNIHILATE, ANNIHILATED, CEMETERY, DEAD, DEATH, JUMP, SignedConfig, SignedMeasure, Step,
    empirical_measure, evolve, init_from_measure, pde_solution, substring_audit, weak_distance,
)
from brwkit.fkpp import LatticeField
from brwkit.potential import ConstantPotential, PiecewisePotential
from oracles import meeting_probability


def _config(pos, sign):
    n = len(pos)
    return SignedConfig(np.array(pos, dtype=np.int64), np.array(sign, dtype=np.int8),
                        np.zeros(n, dtype=np.int8), np.full(n, np.nan))


def test_init_from_measure():
    u0 = LatticeField(-2, 2, np.array([-1.0, 0.0, 0.0, 2.0, 1.0]))
    cfg = init_from_measure(u0, 30_000, 0)
    assert set(np.unique(cfg.position)) == {-2, 1, 2}
    assert np.all(cfg.sign[cfg.position == -2] == -1) and np.all(cfg.sign[cfg.position > 0] == 1)
    assert np.mean(cfg.position == 1) == pytest.approx(0.5, abs=0.02)
    with pytest.raises(ValueError):
        init_from_measure(LatticeField(0, 1, np.zeros(2)), 5, 0)


def test_evolve_invariants():
    u0 = LatticeField(-3, 3, np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]))
    cfg = init_from_measure(u0, 200, 1)
    run = evolve(cfg, ConstantPotential(0.5), 2.0, 2)
    run.final.check()
    assert run.n_events > 0
    assert np.all(np.diff(run.ev_time) > 0)
    last = None
    for last in run.path():
        pass
    assert np.array_equal(last.config.state, run.final.state)
    assert np.array_equal(last.config.position, run.final.position)
    dead = run.final.state == DEAD
    assert np.all(run.final.position[dead] == CEMETERY)
    assert np.all(np.isfinite(run.final.frozen_at[run.final.state != ALIVE]))
    assert np.all(np.isnan(run.final.frozen_at[run.final.state == ALIVE]))
    kinds = set(run.ev_kind.tolist())
    assert kinds <= {JUMP, DEATH, ANNIHILATE}
    ann = run.ev_kind == ANNIHILATE
    assert np.all(run.final.sign[run.ev_index[ann]] == -run.final.sign[run.ev_partner[ann]])
    # particles tuples report 1-based indices and None for the cemetery
    parts = run.final.particles
    assert parts[0][0] == 1
    assert all(p[1] is None for p, d in zip(parts, dead) if d)


def test_evolve_rejects_bad_input():
    cfg = _config([0, 1], [1, -1])
    with pytest.raises(ValueError, match="bounded below"):
        evolve(cfg, ConstantPotential(0.0), 1.0, 0)
    with pytest.raises(ValueError, match="all-alive"):
        evolve(SignedConfig(cfg.position, cfg.sign, np.array([0, 1], dtype=np.int8),
                            cfg.frozen_at), ConstantPotential(1.0), 1.0, 0)
    with pytest.raises(AssertionError, match="share site"):
        evolve(_config([0, 0], [1, -1]), ConstantPotential(1.0), 1.0, 0)


def test_meeting_probability():
    # oracle: distance-chain linear solve; equals 2 - sqrt(3) at kappa = 1
    kappa = ConstantPotential(1.0)
    n = 20_000
    met = 0
    for s in range(n):
        run = evolve(_config([0, 1], [1, -1]), kappa, 60.0, s)
        met += int(np.any(run.final.state == ANNIHILATED))
    p = meeting_probability(1.0, 1)
    assert p == pytest.approx(2 - math.sqrt(3), abs=1e-12)
    assert abs(met / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_same_sign_never_annihilates():
    run = evolve(_config([0, 1, 2], [1, 1, 1]), ConstantPotential(0.2), 5.0, 0)
    assert not np.any(run.final.state == ANNIHILATED)


def test_empirical_measure():
    cfg = _config([0, 0, 2, 3], [1, 1, -1, 1])
    mu = empirical_measure(cfg)
    assert mu.window_lo == 0 and mu.mass.tolist() == [0.5, 0, -0.25, 0.25]
    assert mu.cemetery == 0.0 and mu.at(10) == 0.0


def test_weak_distance():
    mu = SignedMeasure(0, np.array([0.5, -0.5]), 0.0)
    f = LatticeField(0, 1, np.array([0.5, -0.5]))
    assert weak_distance(mu, f) == 0.0
    g = LatticeField(-1, 1, np.array([0.1, 0.4, -0.5]))
    assert weak_distance(mu, g) == pytest.approx(0.1)


arrays = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=6)


@given(arrays, arrays, arrays, st.integers(-3, 3), st.integers(-3, 3))
def test_weak_distance_triangle(a, b, c, la, lb):
    A = SignedMeasure(la, np.array(a), 0.0)
    B = SignedMeasure(lb, np.array(b), 0.0)
    C = SignedMeasure(0, np.array(c), 0.0)
    assert weak_distance(A, C) <= weak_distance(A, B) + weak_distance(B, C) + 1e-12
    assert weak_distance(A, B) == pytest.approx(weak_distance(B, A))


def test_audit_passes_on_real_runs():
    rng = np.random.default_rng(0)
    for s in range(30):
        k = rng.uniform(0.2, 1.5, size=(2, 121))
        kappa = PiecewisePotential([1.0], k, -60)
        u0 = LatticeField(-3, 3, rng.choice([-1.0, 1.0], size=7))
        rep = substring_audit(evolve(init_from_measure(u0, 20, s), kappa, 2.0, s))
        assert rep.ok, rep.violations[:1]
        assert rep.n_steps > 0


def test_audit_flags_inserted_sign():
    a = _config([0, 1], [1, 1])
    b = SignedConfig(np.array([0, 5]), np.array([1, 1], dtype=np.int8), a.state, a.frozen_at, 1.0)
    c = SignedConfig(np.array([0, 1]), np.array([1, -1], dtype=np.int8), a.state, a.frozen_at, 2.0)
    rep = substring_audit([Step(0.0, a, None, -1), Step(1.0, b, JUMP, 1), Step(2.0, c, JUMP, 1)])
    assert rep.ok is False and len(rep.violations) == 1
    assert "crossing count increased" in rep.violations[0]["problems"]


def test_pde_solution_normalised():
    u0 = LatticeField(0, 1, np.array([2.0, -2.0]))
    u = pde_solution(u0, ConstantPotential(1.0), 0.0)
    assert np.abs(u.values).sum() == pytest.approx(1.0)


def test_empirical_measure_tracks_pde():
    u0 = LatticeField(-2, 2, np.array([1.0, -1.0, 0.0, 1.0, 1.0]))
    kappa = ConstantPotential(0.5)
    n = 20_000
    run = evolve(init_from_measure(u0, n, 3), kappa, 1.0, 4)
    d = weak_distance(empirical_measure(run.final), pde_solution(u0, kappa, 1.0))
    assert d < 5 / math.sqrt(n)


def test_event_csv(tmp_path):
    run = evolve(_config([0, 3], [1, -1]), ConstantPotential(1.0), 3.0, 0)
    p = tmp_path / "ev.csv"
    run.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "time,particle,kind,site"
    assert len(lines) == run.n_events + 1
