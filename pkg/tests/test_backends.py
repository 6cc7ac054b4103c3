import os
import subprocess
import sys

import numpy as np
import pytest

from brwkit import BACKEND
from brwkit._kernels import backends
from brwkit.env import DistSpec, sample_environment
from brwkit.rng import stream

BK = backends()
needs_cython = pytest.mark.skipif("cython" not in BK, reason="compiled backend not built")


def _workloads():
    env = sample_environment(DistSpec("two_point", 1.0, 2.0), (-60, 60), 7)
    kappa = np.stack([np.where(stream(3, "t").random(121) < 0.5, 1.0, 2.0),
                      np.full(121, 0.7)])
    breaks = np.array([0.5])
    pos0 = stream(5, "t").integers(-3, 4, size=200).astype(np.int64)
    sign0 = np.where(pos0 >= 0, 1, -1).astype(np.int8)
    p3 = np.stack([np.full(401, 0.6), np.full(401, 0.7), np.full(401, 0.8)])
    l3 = np.stack([np.full(401, 1.5), np.full(401, 2.0), np.full(401, 2.5)])
    zeta = -stream(6, "t").random(300)
    logg = np.log(np.clip(stream(7, "t").random(121), 0.05, 1))
    return {
        "brw_batch": lambda c, g: c.brw_batch(env.rates, -60, 0, 2.5, 300, 10**6, logg, 1, g),
        "brw_positions": lambda c, g: c.brw_positions(env.rates, -60, 0, 2.5, 10**6, g),
        "srw_integral_batch": lambda c, g: c.srw_integral_batch(breaks, kappa, -60, 0, 2.0, 3000, g),
        "killed_batch": lambda c, g: c.killed_batch(breaks, kappa, -60, 2.0, 0, 1.5, 3000, g),
        "annihilate": lambda c, g: c.annihilate(breaks, kappa, -60, 2.0, pos0, sign0, 1.0, g),
        "tilt_recursion": lambda c, g: c.tilt_recursion(1.5 + stream(8, "t").random(500), 0.3, 0.5),
        "tilted_batch": lambda c, g: c.tilted_batch(p3[1], l3[1], -200, 0, 20, 30.0, 500, g),
        "coupled_steps": lambda c, g: c.coupled_steps(p3, l3, -200, 0, 150, g),
        "srw_tilt_weight_batch": lambda c, g: c.srw_tilt_weight_batch(zeta, -250, -0.5, 0, 3, 40.0, 500, g),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.dtype == b.dtype and np.array_equal(a, b, equal_nan=a.dtype.kind == "f")
    return a == b


@needs_cython
@pytest.mark.parametrize("name", list(_workloads()))
def test_backends_bit_identical(name):
    fn = _workloads()[name]
    out = {b: fn(BK[b], stream(0, "backend", name)) for b in ("python", "cython")}
    assert _same(out["python"], out["cython"])


@needs_cython
def test_generator_left_in_same_state():
    fn = _workloads()["killed_batch"]
    g1, g2 = stream(1, "state"), stream(1, "state")
    fn(BK["python"], g1)
    fn(BK["cython"], g2)
    assert g1.random() == g2.random()


def test_backend_name():
    assert BACKEND in ("python", "cython")


def test_pure_python_switch():
    code = ("import brwkit, numpy as np;"
            "from brwkit.walk import srw_endpoints;"
            "print(brwkit.BACKEND, int(srw_endpoints(0, 2.0, 50, 1).sum()))")
    env = dict(os.environ, BRWKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, total = out.stdout.split()
    assert name == "python"
    from brwkit.walk import srw_endpoints
    assert int(total) == int(srw_endpoints(0, 2.0, 50, 1).sum())
