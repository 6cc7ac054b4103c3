"""Randomised structural properties of the linear flow and of sign sequences."""
import numpy as np
from hypothesis import given, settings, strategies as st

from brwkit.crossings import compress, count_crossings, is_substring, sigma
from brwkit.fkpp import IntegratorOpts, LatticeField, integrate_linear
from brwkit.potential import PiecewisePotential
from oracles import brute_sigma

OPTS = IntegratorOpts(dt=0.02, window_margin=8)
signs = st.lists(st.sampled_from([-1, 1]), max_size=7).map(tuple)
vals = st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=9)


def _field(v):
    return LatticeField(-(len(v) // 2), -(len(v) // 2) + len(v) - 1, np.array(v))


def _kappa(seed):
    rng = np.random.default_rng(seed)
    return PiecewisePotential.from_sites(rng.uniform(-0.5, 1.5, 41), -20)


@settings(max_examples=40, deadline=None)
@given(vals, st.floats(-2, 2), st.integers(0, 1000))
def test_superposition(v, a, seed):
    f = _field(v)
    g = _field(list(reversed(v)))
    kappa = _kappa(seed)
    lhs = integrate_linear(LatticeField(f.window_lo, f.window_hi, f.values + a * g.values), kappa, 0.7, OPTS)
    rhs = integrate_linear(f, kappa, 0.7, OPTS).values + a * integrate_linear(g, kappa, 0.7, OPTS).values
    assert np.allclose(lhs.values, rhs, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 3), min_size=1, max_size=9), st.integers(0, 1000))
def test_comparison_principle(v, seed):
    # non-negative data stay non-negative
    u = integrate_linear(_field(v), _kappa(seed), 0.9, OPTS)
    assert u.values.min() >= -1e-12


@given(vals)
def test_sigma_of_compress(v):
    assert sigma(compress(v)) == count_crossings(v) == brute_sigma(v, 1e-12)
    assert compress(list(compress(v))) == compress(v)


@given(signs)
def test_substring_reflexive(a):
    assert is_substring(a, a)
    assert is_substring((), a)


@given(signs, signs, signs)
def test_substring_transitive(a, b, c):
    if is_substring(a, b) and is_substring(b, c):
        assert is_substring(a, c)


@given(signs, signs)
def test_substring_shortens(a, b):
    if is_substring(a, b):
        assert len(a) <= len(b)
