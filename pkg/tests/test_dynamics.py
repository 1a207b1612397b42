import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifshitz.dynamics import (
    FAMILIES,
    eval_lift,
    get_family,
    iterate_orbit,
    local_bounds,
    verify_assumptions,
)
from lifshitz.errors import NumericOverflowError, ParameterDomainError

PI2_5 = math.pi**2 / 5


def test_eval_examples(model):
    assert eval_lift(model, 0.0, [0.0], 0.0) == 0.0
    assert eval_lift(model, 0.0, [0.0], 0.5) == pytest.approx(0.7, abs=1e-15)
    # 0.25 + sin^2(pi/4)/5 + 0.01 - 0.002 with sin^2(pi/4) = 1/2
    assert eval_lift(model, 0.01, [0.002], 0.25) == pytest.approx(0.25 + 0.5 / 5 + 0.01 - 0.002, abs=1e-15)
    assert eval_lift(model, 0.01, [0.002], 0.25) == pytest.approx(0.358, abs=1e-12)


def test_eval_out_of_box(model):
    with pytest.raises(ParameterDomainError):
        eval_lift(model, 0.9, [0.0], 0.0)
    with pytest.raises(ParameterDomainError):
        eval_lift(model, 0.0, [-0.1], 0.0)


def test_iterate_examples(model):
    assert iterate_orbit(model, 0.0, [[0.0]] * 3, 0.0) == 0.0
    g = 0.7 + math.sin(0.7 * math.pi) ** 2 / 5
    assert iterate_orbit(model, 0.0, [[0.0], [0.0]], 0.5) == pytest.approx(g, abs=1e-15)
    assert g == pytest.approx(0.830902, abs=1e-6)
    assert iterate_orbit(model, 0.0, np.empty((0, 1)), 0.3) == 0.3
    final, traj = iterate_orbit(model, 0.0, [[0.0], [0.0]], 0.5, trace=True)
    assert traj[0] == 0.5 and traj[-1] == final and len(traj) == 3


def test_nonfinite_orbit_signals_overflow():
    from lifshitz.dynamics import LiftFamily

    fam = LiftFamily("blowup", 1, 1, (-1, 1), ((0,), (1,)), lambda E, y, x: np.asarray(x) * 1e300, -0.5)
    with pytest.raises(NumericOverflowError), np.errstate(over="ignore"):
        iterate_orbit(fam, 0.0, [[0.0]] * 5, 1.0)


def test_catalog():
    assert {"model", "rigid-translation", "rigid-rotation", "anderson"} <= set(FAMILIES)
    with pytest.raises(ParameterDomainError):
        get_family("nope")
    with pytest.raises(ParameterDomainError):
        get_family("model", amplitude=0.5)


@pytest.mark.parametrize("name", ["model", "rigid-translation", "rigid-rotation", "anderson"])
def test_equivariance_and_monotonicity(name):
    fam = get_family(name)
    rng = np.random.default_rng(11)
    lo_y, hi_y = np.asarray(fam.y_box[0]), np.asarray(fam.y_box[1])
    E = rng.uniform(*fam.e_range, 1000) if name != "anderson" else rng.uniform(-0.5, 0.5, 1000)
    y = rng.uniform(lo_y, hi_y, (1000, fam.d))
    x = rng.uniform(-3, 3, 1000)
    g0, g1 = fam.func(E, y, x), fam.func(E, y, x + 1)
    assert np.max(np.abs(g1 - g0 - 1)) < 1e-10
    xs = np.linspace(-1, 1, 1000)
    gs = fam.func(0.1, y[0], xs)
    assert np.all(np.diff(gs) > 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n1=st.integers(0, 50), n2=st.integers(0, 50), E=st.floats(-0.5, 0.5))
def test_composition_associative(model, seed, n1, n2, E):
    w = np.random.default_rng(seed).uniform(0, 0.5, (n1 + n2, 1))
    whole = iterate_orbit(model, E, w, 0.1)
    assert whole == iterate_orbit(model, E, w[n1:], iterate_orbit(model, E, w[:n1], 0.1))


def test_model_passes(model, mu015):
    rep = verify_assumptions(model, mu015)
    assert rep.passed and rep.k_hat == 1
    assert rep.c1 <= PI2_5 <= rep.c2
    assert rep.c1 <= rep.c2
    parsed = json.loads(rep.to_json())
    assert parsed["passed"] is True
    assert "k_hat: 1" in rep.to_text().splitlines()


def test_flipped_amplitude_fails_g2():
    rep = verify_assumptions(get_family("model", amplitude=-0.2))
    assert not rep.g2 and "G2" in rep.witnesses
    assert rep.witnesses["G2"]["G_minus_x"] < 0


def test_rigid_translation_fails_g2():
    rep = verify_assumptions(get_family("rigid-translation"))
    assert not rep.g2 and not rep.passed


def test_m3_uses_measure_support(model):
    from lifshitz import disorder as dis

    assert verify_assumptions(model, dis.uniform(0.15)).m3
    rep = verify_assumptions(model, dis.uniform(0.3))
    assert not rep.m3 and rep.witnesses["M3"]["G"] <= model.x_star


def test_local_bounds(model):
    b = local_bounds(model, 0.05)
    for g in (b.gamma_E, b.Gamma_E, b.gamma_y, b.Gamma_y):
        assert g == pytest.approx(1.0, abs=1e-8)
    assert b.c1 <= PI2_5 <= b.c2
    assert abs(b.c1 / PI2_5 - 1) < 0.05 and abs(b.c2 / PI2_5 - 1) < 0.05
    with pytest.raises(ParameterDomainError):
        local_bounds(model, 0.0)
