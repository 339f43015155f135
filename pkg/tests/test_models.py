import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from flowkick import (CATALOG, DisturbanceParams, desingularized_residual, flow, get_model,
                      newton_fixed_point)
from flowkick.models import ansatz_tc_lambda, make_klausmeier, make_logistic, make_predator_prey


def test_logistic_equilibria():
    eq = make_logistic().oracles["equilibria"]
    np.testing.assert_allclose(eq(-0.24), [0.4, 0.6], atol=1e-15)
    np.testing.assert_allclose(eq(0.0), [0.0, 1.0], atol=0)
    assert eq(-0.3) == []


def test_logistic_continuous_sn():
    entry = make_logistic()
    assert entry.oracles["equilibria"](-0.25) == [0.5]
    assert entry.known_values["lambda_sn"].value == -0.25


def test_logistic_vector_field():
    sys = make_logistic().system
    assert sys.vector_field(0.5, -0.24)[0] == pytest.approx(0.01, abs=1e-15)
    prop = make_logistic("proportional_rate").system
    assert prop.vector_field(0.5, 0.2)[0] == pytest.approx(0.25 - 0.1, abs=1e-15)


def test_logistic_unknown_mode():
    with pytest.raises(ValueError):
        make_logistic("seasonal")


def test_klausmeier_sn_value():
    entry = make_klausmeier(0.75)
    lam, x = entry.oracles["sn_point"]()
    assert lam == 1.5
    np.testing.assert_allclose(x, [1.0, 0.75])
    # the two vegetated equilibria coincide there
    a, b = entry.oracles["vegetated"](1.5)
    np.testing.assert_allclose(a, b)


def test_klausmeier_vegetated_equilibria():
    veg = make_klausmeier(0.75).oracles["vegetated"](2.0)
    x1 = sorted(v[0] for v in veg)
    np.testing.assert_allclose(x1, [(2 - np.sqrt(1.75)) / 1.5, (2 + np.sqrt(1.75)) / 1.5])
    # the quoted decimals are rounded loosely; the formula is asserted above
    np.testing.assert_allclose(x1, [0.45143, 2.21524], atol=5e-5)
    sys = make_klausmeier(0.75).system
    for v in veg:
        assert np.linalg.norm(sys.vector_field(v, 2.0)) < 1e-14


def test_klausmeier_barren_fixed_point_value():
    x = make_klausmeier().oracles["barren_fixed_point"](1.0, 2.0)
    np.testing.assert_allclose(x, [0.0, 3.16395], atol=1e-5)


def test_predator_prey_invariant_point():
    sys = make_predator_prey().system
    for tau, lam in [(0.5, 0.0), (1.0, 0.3), (4.0, 0.2), (2.0, 1.0)]:
        assert np.linalg.norm(desingularized_residual(sys, tau, [4.0, 0.0], lam)) < 1e-12


def test_predator_prey_growth_constant():
    entry = make_predator_prey()
    a = entry.known_values["a"].value
    assert a == pytest.approx(0.364665, abs=1e-6)
    assert a == pytest.approx(0.365, abs=entry.known_values["lambda_tc"].tol)


def test_ansatz_values():
    a = 0.5 - np.exp(-2.0)
    for tau in (0.5, 1.0, 2.0):
        assert ansatz_tc_lambda(tau) == pytest.approx((1 - np.exp(-a * tau)) / tau, rel=1e-14)
    assert ansatz_tc_lambda(1.0) == pytest.approx(0.30555, abs=5e-5)
    assert ansatz_tc_lambda(2.0) == pytest.approx(0.25887, abs=5e-5)
    assert ansatz_tc_lambda(1e-9) == pytest.approx(0.5 - np.exp(-2.0), abs=1e-9)
    assert ansatz_tc_lambda(0.0) == pytest.approx(0.5 - np.exp(-2.0), abs=0)
    with pytest.raises(ValueError):
        ansatz_tc_lambda(-1.0)


def test_predator_prey_closed_curve_orbit():
    # at lambda = 1/15, tau = 1 interior orbits settle on a closed curve around the
    # unstable coexistence point: neither converge to a point nor collapse to y = 0
    sys = make_predator_prey().system
    from flowkick import iterate_orbit
    orb = iterate_orbit(sys, [2.0, 1.0], DisturbanceParams(1.0, 1.0 / 15.0), 600)
    tail = orb.post[-200:]
    assert not orb.exited
    assert np.min(tail[:, 1]) > 1e-3
    assert np.ptp(tail[:, 0]) > 0.1
    # the amplitude has settled: the last two windows have similar spread
    assert np.ptp(tail[:100, 0]) == pytest.approx(np.ptp(tail[100:, 0]), rel=0.05)


def test_catalog_entries_have_provenance():
    for name in CATALOG:
        entry = get_model(name)
        assert entry.name == name
        for kv in entry.known_values.values():
            assert kv.provenance and kv.tol >= 0
        assert entry.describe().startswith(name)
    assert not get_model("logistic-proportional").canonical
    with pytest.raises(KeyError):
        get_model("lorenz")


@given(x=st.floats(0.01, 1.5), t=st.floats(0.0, 3.0))
def test_logistic_analytic_flow_agrees(x, t):
    sys = make_logistic().system
    exact = flow(sys, x, t, exact=True)[0]
    assert exact == pytest.approx(oracles.logistic_flow(x, t), rel=1e-14)
    assert abs(flow(sys, x, t)[0] - exact) < 1e-8


@given(lam=st.floats(-0.24, 0.5))
def test_logistic_equilibria_match_newton(lam):
    entry = make_logistic()
    for x in entry.oracles["equilibria"](lam):
        rec = newton_fixed_point(entry.system, DisturbanceParams(0.0, lam), x + 0.01)
        assert rec.x[0] == pytest.approx(x, abs=1e-9)


@given(lam=st.floats(1.6, 3.0))
def test_klausmeier_equilibria_match_newton(lam):
    entry = make_klausmeier()
    for x in entry.oracles["vegetated"](lam):
        rec = newton_fixed_point(entry.system, DisturbanceParams(0.0, lam), x * 1.01)
        np.testing.assert_allclose(rec.x, x, atol=1e-9)


@given(lam=st.floats(0.01, 0.35))
def test_predator_prey_coexistence_matches_newton(lam):
    entry = make_predator_prey()
    x = entry.oracles["coexistence"](lam)
    rec = newton_fixed_point(entry.system, DisturbanceParams(0.0, lam), x * 1.02)
    np.testing.assert_allclose(rec.x, x, atol=1e-9)


@given(tau=st.floats(0.05, 3.0), lam=st.floats(0.1, 3.0))
def test_klausmeier_barren_matches_newton(tau, lam):
    entry = make_klausmeier()
    rec = newton_fixed_point(entry.system, DisturbanceParams(tau, lam), [0.0, lam])
    np.testing.assert_allclose(rec.x, entry.oracles["barren_fixed_point"](tau, lam), atol=1e-8)
