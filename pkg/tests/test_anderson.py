import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifshitz import anderson as an
from lifshitz.dynamics import iterate_orbit
from lifshitz.errors import ChartSingularity, ParameterDomainError

UNIFORM = an.AndersonModel.uniform(0.0, 1.0)
FREE = an.AndersonModel.atom(0.0)


def line_angle_oracle(eps, us, x0):
    """Angle mod 1 of the line spanned by the propagated vector; no lift involved."""
    a = -math.pi / 4 - math.pi * x0
    v = np.array([math.cos(a), math.sin(a)])
    for u in us:
        v = an.edge_transfer_matrix(eps, u) @ v
        v /= np.hypot(*v)
    return (-0.25 - math.atan2(v[1], v[0]) / math.pi) % 1.0


def circle_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1 - d)


def test_model_basics():
    assert UNIFORM.spectrum == (-2.0, 3.0)
    assert UNIFORM.check_a1() and not FREE.check_a1()
    assert an.AndersonModel.parse("uniform:-1,2").spectrum == (-3.0, 4.0)
    with pytest.raises(ParameterDomainError):
        an.AndersonModel.parse("uniform:1,1")
    with pytest.raises(ParameterDomainError):
        an.AndersonModel.parse("gauss:0,1")


def test_transfer_matrix():
    a = 0.3
    assert np.array_equal(an.transfer_matrix(a - 2, a), [[-2, -1], [1, 0]])
    assert np.array_equal(an.transfer_matrix(0, 0), [[0, -1], [1, 0]])
    rng = np.random.default_rng(1)
    dets = [np.linalg.det(an.transfer_matrix(E, v)) for E, v in rng.uniform(-5, 5, (10**4, 2))]
    assert np.max(np.abs(np.array(dets) - 1)) < 1e-14


def test_chart_step():
    assert an.projective_chart_step(0, 0, 0) == 0
    assert an.projective_chart_step(0.1, 0, 0) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(ChartSingularity):
        an.projective_chart_step(0, 0, 1)
    # t = -1 - 1/(t - 1) has only t = 0: (t - 1)(t + 1) + 1 = t^2
    for t in np.linspace(-3, 3, 61):
        if t != 1:
            assert an.projective_chart_step(0, 0, t) - t == pytest.approx(t * t / (1 - t), abs=1e-12)


def test_lift_step_examples():
    assert an.projective_lift_step(np.eye(2), 0.3) == pytest.approx(0.3, abs=1e-15)
    assert an.projective_lift_step([[0, -1], [1, 0]], 0.0) == pytest.approx(0.5, abs=1e-15)
    assert an.projective_lift_step(an.edge_transfer_matrix(0, 0), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert an.lift_to_chart(0.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ParameterDomainError):
        an.projective_lift_step(np.zeros((2, 2)), 0.0)
    with pytest.raises(ChartSingularity):
        an.ProjectivePoint(an.X_STAR - 0.5).t


def test_projective_point():
    p = an.ProjectivePoint(2.3)
    assert p.angle == pytest.approx(0.3)
    assert an.chart_to_angle(p.t) == pytest.approx(p.angle, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(-0.5, 0.5), u=st.floats(0, 1), x=st.floats(-5, 5))
def test_lift_step_matches_kernel_and_chart(eps, u, x):
    fam = an.anderson_family(1.0)
    g = an.projective_lift_step(an.edge_transfer_matrix(eps, u), x)
    assert g == pytest.approx(float(fam.func(eps, np.array([u]), x)), abs=1e-12)
    assert abs(g - x) < 1
    try:
        t = an.lift_to_chart(x)
    except ChartSingularity:
        return
    if abs(t - 1) > 1e-6:
        tg = an.projective_chart_step(eps, u, t)
        assert circle_dist(an.chart_to_angle(tg), g) < 1e-10


def test_per_step_displacement_bulk():
    rng = np.random.default_rng(2)
    n = 10**5
    eps, u, x = rng.uniform(-0.5, 0.5, n), rng.uniform(0, 1, n), rng.uniform(-3, 3, n)
    g = an.anderson_family(1.0).func(eps, u[:, None], x)
    d = g - x
    assert np.all((d > -1) & (d < 1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), eps=st.floats(-0.5, 1.0), x0=st.floats(-1, 1))
def test_orbit_projects_to_line_angle(seed, eps, x0):
    us = np.random.default_rng(seed).uniform(0, 1, 200)
    got = iterate_orbit(an.anderson_family(1.0), eps, us[:, None], x0)
    assert circle_dist(got, line_angle_oracle(eps, us, x0)) < 1e-9


def test_lift_orientation():
    fam = an.anderson_family(1.0)
    xs = np.linspace(-1, 1, 101)
    y = np.array([0.4])
    assert np.all(fam.func(0.2, y, xs) > fam.func(0.1, y, xs))
    assert np.all(fam.func(0.1, np.array([0.5]), xs) < fam.func(0.1, y, xs))
    assert float(fam.func(0.3, y, an.X_STAR)) == pytest.approx(an.X_STAR + 0.5)


def test_free_ids_closed_form():
    assert an.free_ids(0.0) == 0.5
    assert an.free_ids(-3) == 0.0 and an.free_ids(3) == 1.0


def test_sturm_free_chain():
    curve = an.ids_curve(FREE, [-1.9, -1, 0, 1, 1.9], "sturm", N=10**4, realizations=1)
    for p in curve.points:
        assert abs(p.value - an.free_ids(p.E)) <= 0.005
    assert an.ids_sturm(FREE, 0.0, 10**4, 1).value == pytest.approx(0.5, abs=1e-3)


def test_sturm_below_and_above_spectrum():
    assert an.ids_sturm(UNIFORM, -2.5, 2000, 3).value == 0.0
    assert an.ids_sturm(UNIFORM, 3.5, 2000, 3).value == 1.0


def test_sturm_curve_is_pathwise_monotone():
    c = an.ids_curve(UNIFORM, np.linspace(-2.2, 3.2, 30), "sturm", N=2000, realizations=4)
    assert all(b >= a for a, b in zip(c.values, c.values[1:]))
    assert c.is_monotone()


def test_rotation_route_free_model():
    for E in (-1.0, 0.0, 0.5, 1.5):
        p = an.ids_rotation(FREE, E, n=10**6, replicates=1)
        assert abs(p.value - an.free_ids(E)) < 1e-3
        assert p.extra["rho"] == pytest.approx(1 - p.value)


def test_rotation_route_above_spectrum():
    p = an.ids_rotation(UNIFORM, 3.2, n=10**5, replicates=4)
    assert abs(p.value - 1.0) <= max(3 * p.stderr, 1e-4)


def test_routes_agree_small():
    for E in (-1.0, 0.5, 2.0):
        r = an.ids_rotation(UNIFORM, E, n=2 * 10**5, replicates=4)
        s = an.ids_sturm(UNIFORM, E, N=5000, realizations=20)
        assert abs(r.value - s.value) <= 0.01


def test_edge_scan_flags_and_zero():
    scan = an.edge_scan(UNIFORM, [0.4, 0.1, 0.0], N=2000, realizations=5)
    by_eps = {p.eps: p for p in scan.points}
    assert by_eps[0.0].value == 0.0 and not by_eps[0.0].resolved
    assert by_eps[0.4].resolved and 0 < by_eps[0.4].value < 1
    assert not by_eps[0.1].resolved


def test_edge_scan_mirror_symmetry():
    lower = an.edge_scan(UNIFORM, [0.4, 0.3], side="lower", N=10**4, realizations=50)
    upper = an.edge_scan(UNIFORM, [0.4, 0.3], side="upper", N=10**4, realizations=50, seed=1)
    for p, q in zip(lower.points, upper.points):
        assert abs(p.value - q.value) <= 4 * math.hypot(p.stderr, q.stderr)


def test_edge_rotation_route_matches_sturm():
    rot = an.edge_scan(UNIFORM, [0.4], route="rotation", n=10**6, replicates=4)
    st_ = an.edge_scan(UNIFORM, [0.4], N=10**4, realizations=50)
    assert abs(rot.points[0].value - st_.points[0].value) < 0.003


def test_hypotheses():
    rep = an.verify_anderson_hypotheses(UNIFORM, 0.1)
    assert rep.passed and rep.k_hat == 1
    assert an.verify_anderson_hypotheses(UNIFORM, 0.1, side="upper").passed
    atom = an.verify_anderson_hypotheses(FREE, 0.1)
    assert atom.m1 is False and not atom.passed
    with pytest.raises(ParameterDomainError):
        an.verify_anderson_hypotheses(UNIFORM, 0.6)
