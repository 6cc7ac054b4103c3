"""The eleven exit criteria, each at its stated size, tolerance and time budget.

Every criterion runs the registered experiment with its default parameters at
seed 0 and prints one line ``PASS|FAIL [k] name: summary``.  Run directly
(``python tests/test_acceptance.py``) or through pytest (``-m acceptance``);
under pytest the lines are repeated in the terminal summary.
"""
from __future__ import annotations

import json
import math
import sys
import time

import pytest

from brwkit.experiments import REGISTRY, run_experiment

pytestmark = pytest.mark.acceptance
SEED = 0
LINES: list[str] = []


def _run(k: int, name: str, budget_s: float, extra=None):
    t0 = time.perf_counter()
    res = run_experiment(name, None, SEED)
    elapsed = time.perf_counter() - t0
    problems = [] if res.ok else ["criterion not met"]
    if elapsed > budget_s:
        problems.append(f"runtime {elapsed:.1f}s over budget {budget_s:.0f}s")
    if extra is not None:
        problems += extra(res)
    status = "FAIL" if problems else "PASS"
    summary = json.dumps(res.summary, default=str, sort_keys=True)
    line = f"{status} [{k:2d}] {name}: {summary} ({elapsed:.1f}s / {budget_s:.0f}s)"
    if problems:
        line += " -- " + "; ".join(problems)
    LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)
    return res, problems


def _defaults(name: str, **expected):
    d = REGISTRY[name].defaults
    for key, val in expected.items():
        assert d[key] == val, f"{name}.{key} is {d[key]!r}, criterion needs {val!r}"


def test_01_crossing_monotonicity():
    _defaults("crossings-check", n_instances=200, window=[-60, 60], support=[-20, 20], t_max=5.0,
              n_times=50, kappa_bound=2.0, max_sigma=5)
    res, problems = _run(1, "crossings-check", 120,
                         lambda r: [] if r.summary["violations"] == 0 else ["violations found"])
    assert not problems, problems


def test_02_single_interface():
    _defaults("interface-check", n_instances=50)
    res, problems = _run(2, "interface-check", 120)
    assert not problems, problems


def test_03_duality():
    _defaults("duality-check", n_runs=10000, k_sigma=3.0, min_pass=11)
    assert len(REGISTRY["duality-check"].defaults["points"]) == 12
    assert max(t for _, _, t in REGISTRY["duality-check"].defaults["points"]) <= 5
    res, problems = _run(3, "duality-check", 300)
    assert not problems, problems


def test_04_feynman_kac_triangle():
    _defaults("feynman-kac-check", c=0.5, t=2.0, k_sigma=3.0, rel_tol=1e-3)

    def closed_form(r):
        bad = [row for row in r.rows if row["case"] == "constant"
               and abs(row["ode"] - row["closed_form"]) > 1e-3 * row["closed_form"]]
        return ["constant case off the closed form"] if bad else []

    res, problems = _run(4, "feynman-kac-check", 120, closed_form)
    assert not problems, problems


def test_05_tilt_closed_forms():
    _defaults("tilt-validate", closed_tol=1e-10, T=2000.0, speed_rel=0.02)

    def speed(r):
        rel = abs(r.summary["speed"] - math.sqrt(3.0)) / math.sqrt(3.0)
        return [] if rel <= 0.02 else [f"speed off by {rel:.3%}"]

    res, problems = _run(5, "tilt-validate", 60, speed)
    assert not problems, problems


def test_06_coupling_exact():
    _defaults("coupling-check", n_triples=1000, n_steps=1000)
    res, problems = _run(6, "coupling-check", 60,
                         lambda r: [] if r.summary["violations"] == 0 else ["ordering violated"])
    assert not problems, problems


def test_07_hitting_order():
    _defaults("hitting-order", t_grid=[2.0, 5.0, 10.0], n_samples=10000, mode="independent")
    d = REGISTRY["hitting-order"].defaults
    assert d["y"] - d["x"] == 5
    res, problems = _run(7, "hitting-order", 60)
    assert not problems, problems


def test_08_annihilation_convergence():
    _defaults("annihilation-convergence", ns=[100, 1000, 10000], replicas=20, t=1.0, slope=-0.5, slope_tol=0.15)
    res, problems = _run(8, "annihilation-convergence", 300)
    assert not problems, problems


def test_09_substring_law():
    _defaults("substring-audit", runs=1000, n=20)
    res, problems = _run(9, "substring-audit", 60,
                         lambda r: [] if r.summary["violations"] == 0 else ["audit violations"])
    assert not problems, problems


def test_10_tightness():
    _defaults("tightness-scan", eps=0.1, env_seeds=[1, 2, 3, 4, 5], slack=2, early=[2.0, 10.0], bound_from=10.0)
    assert REGISTRY["tightness-scan"].defaults["t_grid"][1:] == list(range(2, 21, 2))
    res, problems = _run(10, "tightness-scan", 600)
    assert not problems, problems


def test_11_eta_calibration():
    _defaults("eta-calibration", eta_tol=1e-6, residual_tol=1e-4, v2_tol=1e-4)
    res, problems = _run(11, "eta-calibration", 60)
    assert not problems, problems


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
