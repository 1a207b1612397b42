import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifshitz import disorder as dis
from lifshitz import rotation as rot
from lifshitz.dynamics import get_family, iterate_orbit
from lifshitz.errors import ParameterDomainError


def test_rigid_rotation():
    est = rot.estimate_rotation_number(get_family("rigid-rotation", alpha=0.3), 0.0, dis.uniform(0.1), 1000)
    assert est.rho_hat == pytest.approx(0.3, abs=1e-12)
    assert est.windings == 300


def test_confined_orbit_at_zero(model, mu015):
    est = rot.estimate_rotation_number(model, 0.0, mu015, 10**5, replicates=4, seed=1)
    assert est.rho_hat == 0.0 and est.windings == 0
    assert est.x_min >= model.x_star and est.x_max <= 0.0


def test_deterministic_winding_rate(model):
    n = 10**6
    est = rot.estimate_rotation_number(model, 0.3, dis.uniform(1e-9), n, seed=2)
    x = iterate_orbit(model, 0.3, np.zeros((n, 1)), 0.0)
    assert est.rho_hat > 0
    assert abs(est.rho_hat - x / n) < 1e-3


def test_estimate_invariants(model, mu015):
    est = rot.estimate_rotation_number(model, 0.2, mu015, 20000, replicates=5, seed=3)
    assert est.rho_hat == pytest.approx(np.mean(est.values), abs=1e-15)
    assert est.stderr == pytest.approx(np.std(est.values, ddof=1) / math.sqrt(5))
    assert all(v == w / est.n for v, w in zip(est.values, est.per_replicate_windings))
    assert all(abs(d - w) < 1 for d, w in zip(est.displacements, est.per_replicate_windings))
    assert 0 <= est.rho_hat <= 0.2 + 0.2
    assert list(est.csv_row()) == list(rot.CSV_COLUMNS)


def test_thread_count_does_not_change_result(model, mu015):
    a = rot.estimate_rotation_number(model, 0.1, mu015, 5000, replicates=4, seed=9, threads=1)
    b = rot.estimate_rotation_number(model, 0.1, mu015, 5000, replicates=4, seed=9, threads=3)
    assert a.values == b.values


def test_chunking_does_not_change_result(model, mu015):
    a = rot.estimate_rotation_number(model, 0.1, mu015, 5000, seed=9, chunk=777)
    b = rot.estimate_rotation_number(model, 0.1, mu015, 5000, seed=9)
    assert a.displacements == b.displacements


def test_precondition_errors(model, mu015):
    with pytest.raises(ParameterDomainError):
        rot.estimate_rotation_number(model, 0.0, mu015, 0)
    with pytest.raises(ParameterDomainError):
        rot.estimate_rotation_number(model, 0.0, dis.uniform(0.9), 10)
    with pytest.raises(ParameterDomainError):
        rot.estimate_rotation_number(model, 0.7, mu015, 10)


def test_starting_point_same_word(model, mu015):
    n = 20000
    ests = [rot.estimate_rotation_number(model, 0.2, mu015, n, replicates=4, x0=x0, seed=5) for x0 in (0, 0.3, 0.7)]
    for e in ests[1:]:
        assert all(abs(a - b) <= 2 / n for a, b in zip(ests[0].values, e.values))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), E1=st.floats(-0.3, 0.3), dE=st.floats(0, 0.2), x0=st.floats(-1, 1))
def test_pathwise_monotone_in_E(model, seed, E1, dE, x0):
    w = dis.sample_word(dis.uniform(0.15), seed, 500)
    assert iterate_orbit(model, E1, w, x0) <= iterate_orbit(model, E1 + dE, w, x0)


def test_doubling_n_consistency(model, mu015):
    n = 50000
    a = rot.estimate_rotation_number(model, 0.1, mu015, n, replicates=4, seed=6)
    b = rot.estimate_rotation_number(model, 0.1, mu015, 2 * n, replicates=4, seed=6)
    assert abs(a.rho_hat - b.rho_hat) <= 2 / n + 4 * math.hypot(a.stderr, b.stderr)


def test_adaptive_stops_at_windings(model, mu015):
    res = rot.estimate_rotation_adaptive(model, 0.05, mu015, replicates=2, seed=1, cap=10**7)
    assert not res.capped and res.estimate.windings >= rot.ADAPTIVE_WINDINGS


def test_adaptive_reports_bound_when_capped(model, mu015):
    res = rot.estimate_rotation_adaptive(model, 0.0, mu015, replicates=2, seed=1, cap=2**18)
    assert res.capped and res.estimate.windings == 0
    # zero events: the 95% bound is -ln(0.05)/steps
    assert res.upper_bound == pytest.approx(-math.log(0.05) / res.total_steps, rel=1e-9)


def test_no_backtracking(model, mu015):
    r = rot.check_no_backtracking(model, 0.0, mu015, trials=2000, length=1000)
    assert r.ok and r.infimum >= model.x_star and r.witness is None
    assert rot.check_no_backtracking(model, 0.05, mu015, trials=2000, length=1000).ok
    bad = rot.check_no_backtracking(model, 0.0, dis.uniform(0.3), trials=2000, length=1000)
    assert not bad.ok and bad.witness["value"] <= -1 and bad.infimum <= -1
    with pytest.raises(ParameterDomainError):
        rot.check_no_backtracking(model, -0.1, mu015)


def test_plateau(model, mu015):
    assert rot.detect_plateau(model, mu015, [-0.01, -0.02], n=10**6).plateau
    with pytest.raises(ParameterDomainError):
        rot.detect_plateau(model, mu015, [0.3])
    assert not rot.detect_plateau(get_family("rigid-rotation"), mu015, [-0.01], n=1000).plateau


def test_bracket_examples():
    r = rot.rotation_bracket(1e-4, 1, dict(A=1, a=1, b=1, C=1, l=1, p1=0.5))
    assert r.N == 100 and r.N_prime == 100
    assert r.ln_lower == pytest.approx(-math.log(100) + 100 * math.log(1e-4), abs=1e-9)
    assert r.ln_lower == pytest.approx(-925.6, abs=0.1)
    assert r.ln_upper == pytest.approx(-math.log(100) + 100 * math.log(0.5), abs=1e-9)
    assert r.ln_upper == pytest.approx(-73.9, abs=0.05)
    assert r.ordered
    with pytest.raises(ParameterDomainError):
        rot.rotation_bracket(1e-4, 1, dict(A=1, a=1e-3, b=1, C=1, l=1, p1=0.5))
    with pytest.raises(ParameterDomainError):
        rot.rotation_bracket(1e-4, 1, dict(A=1, a=1, b=1, C=1, l=1, p1=1.0))


def test_default_constants(model, mu015):
    c = rot.default_bracket_constants(model, mu015)
    assert c["b"] == 0.25 and c["p1"] == pytest.approx(0.5)
    assert c["C"] == pytest.approx(1 / 0.15) and c["l"] == 1.0


def test_bracket_slopes_deep():
    """Both bracket slopes reach -1/2 once the 1/|ln bE| correction is small."""
    c = dict(A=9.0, a=0.17, b=0.25, C=1 / 0.15, l=1.0, p1=0.5)
    Es = np.geomspace(1e-36, 1e-40, 3)
    _, lo, up = rot.bracket_slopes(Es, 1, c)
    assert lo[-1] == pytest.approx(-0.5, abs=0.02)
    assert up[-1] == pytest.approx(-0.5, abs=0.02)
