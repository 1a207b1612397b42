import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifshitz.errors import InsufficientData
from lifshitz.fitting import fit_lifshitz_exponent, lifshitz_functional

GRID = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]


@pytest.mark.parametrize("p", [0.5, 0.75])
def test_synthetic_exact(p):
    # exp(-E^-p) underflows below E ~ 1e-5, so the values go in as logarithms
    fit = fit_lifshitz_exponent([(E, -(E**-p)) for E in GRID], log=True)
    assert fit.slope == pytest.approx(-p, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-10)
    assert not fit.excluded


def test_noisy_synthetic():
    rng = np.random.default_rng(12)
    pairs = [(E, -(E**-0.5) * (1 + 0.01 * rng.standard_normal())) for E in GRID]
    fit = fit_lifshitz_exponent(pairs, log=True)
    assert fit.slope == pytest.approx(-0.5, abs=0.02)
    assert fit.slope_stderr < 0.02


def test_exclusions_reported():
    pairs = [(1e-2, 0.0), (1e-3, 1.0), (2.0, 0.5), (1e-4, math.exp(-100)), (1e-5, math.exp(-300))]
    fit = fit_lifshitz_exponent(pairs)
    reasons = [r for _, _, r in fit.excluded]
    assert len(fit.used) == 2 and len(reasons) == 3
    assert any("unresolved" in r for r in reasons)
    assert any("domain" in r for r in reasons)


def test_insufficient():
    with pytest.raises(InsufficientData):
        fit_lifshitz_exponent([(1e-3, 0.0), (1e-4, 0.5)])
    with pytest.raises(InsufficientData):
        fit_lifshitz_exponent([])


@settings(max_examples=50, deadline=None)
@given(scale=st.sampled_from([0.5, 0.25, 0.125, 2.0**-10]), p=st.floats(0.2, 0.9))
def test_rescaling_changes_intercept_only(scale, p):
    """Scaling E by a power of two shifts ln E exactly, so the slope is unchanged."""
    pairs = [(E, -(E**-p) * (1 + 0.1 * math.sin(i))) for i, E in enumerate(GRID)]
    a = fit_lifshitz_exponent(pairs, log=True)
    b = fit_lifshitz_exponent([(E * scale, d) for E, d in pairs], log=True)
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept == pytest.approx(a.intercept - a.slope * math.log(scale), abs=1e-9)


def test_value_and_log_forms_agree():
    pairs = [(E, math.exp(-(E**-0.5))) for E in GRID[:3]]
    a = fit_lifshitz_exponent(pairs)
    b = fit_lifshitz_exponent([(E, math.log(d)) for E, d in pairs], log=True)
    assert a.slope == b.slope


def test_functional():
    assert lifshitz_functional(1e-4, math.exp(-100)) == pytest.approx(-0.5)
