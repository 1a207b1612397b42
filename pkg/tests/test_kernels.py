"""Compiled kernels against their pure-Python twins, and backend selection."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifshitz import kernels

needs_ext = pytest.mark.skipif(kernels.compiled is None, reason="extension not built")
backends = [kernels.pure] + ([kernels.compiled] if kernels.compiled is not None else [])

finite = st.floats(-3, 3, allow_nan=False)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(x0=finite, E=st.floats(-0.5, 0.5), seed=st.integers(0, 2**32), n=st.integers(0, 300))
def test_model_orbit_bit_identical(x0, E, seed, n):
    ys = np.random.default_rng(seed).uniform(0, 0.3, n)
    tc, tp = np.empty(n), np.empty(n)
    assert kernels.compiled.model_orbit(x0, E, 0.2, ys, tc) == kernels.pure.model_orbit(x0, E, 0.2, ys, tp)
    assert np.array_equal(tc, tp)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(x0=finite, eps=st.floats(-1, 6), seed=st.integers(0, 2**32), n=st.integers(0, 300))
def test_anderson_orbit_bit_identical(x0, eps, seed, n):
    us = np.random.default_rng(seed).uniform(0, 1, n)
    assert kernels.compiled.anderson_orbit(x0, eps, us) == kernels.pure.anderson_orbit(x0, eps, us)


@needs_ext
@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 3), coef=st.floats(0, 4), e=st.integers(2, 7))
def test_envelope_passage_bit_identical(k, coef, e):
    eps = 10.0**-e
    args = (2 * k, coef, eps, -0.1, 0.1, eps ** (1 / (2 * k)), 10**7)
    assert kernels.compiled.envelope_passage(*args) == kernels.pure.envelope_passage(*args)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), E=st.floats(-3, 4), n=st.integers(1, 500))
def test_sturm_bit_identical(seed, E, n):
    v = np.random.default_rng(seed).uniform(0, 1, n)
    assert kernels.compiled.sturm_count(v, E) == kernels.pure.sturm_count(v, E)


@pytest.mark.parametrize("impl", backends)
def test_sturm_matches_dense_eigenvalues(impl):
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.uniform(-1, 1, 150)
        H = np.diag(v) + np.diag(-np.ones(149), 1) + np.diag(-np.ones(149), -1)
        # the sign of the hopping is a gauge choice; either way the spectrum is the same
        ev = np.linalg.eigvalsh(H)
        for E in rng.uniform(-3, 3, 5):
            assert impl.sturm_count(v, E) == int(np.sum(ev < E))


@pytest.mark.parametrize("impl", backends)
def test_sturm_zero_pivot_tie_break(impl):
    # V = E makes d_1 = 0; it is treated as +tiny, so not counted
    assert impl.sturm_count(np.array([0.0]), 0.0) == 0
    assert impl.sturm_count(np.array([0.0, 0.0]), 0.0) == 1


@pytest.mark.parametrize("impl", backends)
def test_envelope_cap_reports_minus_one(impl):
    steps, _, _, _ = impl.envelope_passage(2, 1.0, 1e-6, -0.1, 0.1, 1e-3, 10)
    assert steps == -1


def test_pure_python_selected_by_env():
    env = dict(os.environ, LIFSHITZ_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from lifshitz import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
