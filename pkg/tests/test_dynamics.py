import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from flowkick import (DisturbanceParams, DivergenceError, StiffnessError, SystemDef,
                      desingularized_residual, flow, flow_kick, iterate_orbit)
from flowkick import integrate as integrate_mod
from flowkick.models import make_klausmeier, make_logistic, make_predator_prey

LOG = make_logistic().system
KLA = make_klausmeier().system
PP = make_predator_prey().system

# states well inside each model's basin of ordinary behaviour
BOXES = {
    "logistic": (LOG, [0.05], [1.5]),
    "klausmeier": (KLA, [0.1, 0.1], [2.5, 2.5]),
    "predator-prey": (PP, [0.5, 0.1], [4.0, 2.0]),
}


def random_state(rng, name):
    sys, lo, hi = BOXES[name]
    return sys, rng.uniform(lo, hi)


# ---------------------------------------------------------------- examples

def test_flow_logistic_ln2():
    assert flow(LOG, 0.5, np.log(2.0))[0] == pytest.approx(2.0 / 3.0, abs=1e-9)


@pytest.mark.parametrize("name", sorted(BOXES))
def test_flow_zero_time_is_identity(name):
    sys, x = random_state(np.random.default_rng(0), name)
    assert np.array_equal(flow(sys, x, 0.0), x)


def test_flow_klausmeier_barren_decay():
    out = flow(KLA, [0.0, 2.0], 1.0)
    np.testing.assert_allclose(out, [0.0, 2.0 * np.exp(-1.0)], atol=1e-9)


def test_flow_kick_logistic_example():
    p = DisturbanceParams.from_kick(0.4, -0.096)
    expected = oracles.logistic_flow(0.6, 0.4) - 0.096
    assert flow_kick(LOG, 0.6, p)[0] == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.59514, abs=1e-5)


def test_flow_kick_zero_rate_is_flow():
    sys = SystemDef(n=1, f=LOG.f, r=lambda u, lam: 0.0 * u)
    p = DisturbanceParams(0.7, 3.0)
    assert flow_kick(sys, 0.3, p)[0] == pytest.approx(flow(LOG, 0.3, 0.7)[0], abs=0)


def test_flow_kick_klausmeier_barren_fixed_point():
    y = 2.0 / (1.0 - np.exp(-1.0))
    out = flow_kick(KLA, [0.0, y], DisturbanceParams(1.0, 2.0))
    np.testing.assert_allclose(out, [0.0, y], atol=1e-9)


def test_flow_kick_rejects_zero_tau():
    with pytest.raises(ValueError):
        flow_kick(LOG, 0.5, DisturbanceParams(0.0, -0.24))


def test_orbit_converges_monotonically_to_stable_point():
    p = DisturbanceParams.from_kick(0.4, -0.096)
    stable = max(oracles.logistic_fixed_points(0.4, p.lam))
    orb = iterate_orbit(LOG, 0.8, p, 50)
    post = orb.post[:, 0]
    assert not orb.exited and len(orb) == 50
    assert np.all(np.diff(post) < 0) and np.all(post > stable)
    # the multiplier is close to 1, so the approach is slow
    assert iterate_orbit(LOG, 0.8, p, 400).post[-1, 0] == pytest.approx(stable, abs=1e-6)


def test_orbit_post_kick_relation():
    p = DisturbanceParams(0.4, -0.24)
    orb = iterate_orbit(LOG, 0.8, p, 5)
    np.testing.assert_allclose(orb.post, orb.pre + p.tau * p.lam, atol=0)


def test_orbit_exits_domain_without_fixed_points():
    orb = iterate_orbit(LOG, 0.8, DisturbanceParams.from_kick(2.5, -0.6), 100)
    assert orb.exited
    assert len(orb) < 100
    assert orb.post[-1, 0] < 0


def test_orbit_predator_crash():
    orb = iterate_orbit(PP, [2.0, 1.0], DisturbanceParams(4.0, 0.2), 500)
    assert not orb.exited
    np.testing.assert_allclose(orb.post[-1], [4.0, 0.0], atol=1e-3)


def test_orbit_dense_samples():
    p = DisturbanceParams(0.5, -0.1)
    orb = iterate_orbit(LOG, 0.7, p, 3, dense=True)
    assert orb.dense_x.shape == (3 * 33, 1)
    # the last sample of each flow phase is the pre-kick state
    np.testing.assert_allclose(orb.dense_x[32::33], orb.pre, atol=1e-12)


def test_residual_at_zero_tau_is_vector_field():
    assert desingularized_residual(LOG, 0.0, 0.5, -0.24)[0] == pytest.approx(0.01, abs=1e-15)
    assert desingularized_residual(KLA, 0.0, [0.0, 1.2], 1.2) == pytest.approx([0.0, 0.0])


def test_residual_first_order_in_tau():
    taus = np.array([0.1, 0.05, 0.025])
    exact = (oracles.logistic_map(0.5, taus, -0.24) - 0.5) / taus
    got = np.array([desingularized_residual(LOG, t, 0.5, -0.24)[0] for t in taus])
    np.testing.assert_allclose(got, exact, atol=1e-9)
    err = np.abs(got - 0.01)
    # f'(0.5) = 0 cancels the first-order term here, so the observed order is 2
    order = np.polyfit(np.log(taus), np.log(err), 1)[0]
    assert order >= 0.9


# ---------------------------------------------------------------- errors

def test_divergence_error_carries_last_state():
    blow = SystemDef(n=1, f=lambda x: x * x, r=lambda u, lam: 0.0 * u)
    with pytest.raises(DivergenceError) as info:
        flow(blow, 1.0, 2.0)
    assert 0.9 < info.value.t < 1.0
    assert np.all(np.isfinite(info.value.state))


def test_stiffness_error(monkeypatch):
    monkeypatch.setattr(integrate_mod, "MAX_STEPS", 2000)
    chatter = SystemDef(n=1, f=lambda x: -np.sign(x), r=lambda u, lam: 0.0 * u)
    with pytest.raises(StiffnessError):
        flow(chatter, 0.5, 1.0)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        flow(LOG, 0.5, -1.0)


# ---------------------------------------------------------------- properties

@given(x=st.floats(0.01, 1.5), t=st.floats(0.0, 3.0))
def test_flow_matches_closed_form(x, t):
    assert abs(flow(LOG, x, t)[0] - oracles.logistic_flow(x, t)) < 1e-8


@pytest.mark.parametrize("name", sorted(BOXES))
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.0, 1.5), t=st.floats(0.0, 1.5))
def test_semigroup(name, seed, s, t):
    sys, x = random_state(np.random.default_rng(seed), name)
    tol = 1e-10
    direct = flow(sys, x, s + t, tol)
    composed = flow(sys, flow(sys, x, s, tol), t, tol)
    assert np.linalg.norm(direct - composed) <= 10 * tol * max(1.0, np.linalg.norm(direct))


@pytest.mark.parametrize("name", sorted(BOXES))
@given(seed=st.integers(0, 2**32 - 1))
def test_taylor_remainder_bounded(name, seed):
    sys, x = random_state(np.random.default_rng(seed), name)
    taus = 0.2 / 2.0 ** np.arange(10)
    ratios = [np.linalg.norm(flow(sys, x, t) - x - t * sys.f(x)) / t**2 for t in taus]
    # |phi - x - t f| / t^2 tends to |Df f| / 2, so it stays bounded as t halves
    limit = 0.5 * np.linalg.norm(_df_f(sys, x))
    assert max(ratios[1:]) <= max(ratios[0], 2.0 * limit) + 1e-3
    assert ratios[-1] == pytest.approx(limit, rel=0.02, abs=1e-3)


def _df_f(sys, x, h=1e-6):
    fx = sys.f(x)
    return (sys.f(x + h * fx) - sys.f(x - h * fx)) / (2 * h)


@pytest.mark.parametrize("name", sorted(BOXES))
def test_flow_matches_scipy(name):
    rng = np.random.default_rng(7)
    for _ in range(5):
        sys, x = random_state(rng, name)
        t = rng.uniform(0.1, 3.0)
        np.testing.assert_allclose(flow(sys, x, t), oracles.solve_flow(sys.f, x, t),
                                   rtol=1e-8, atol=1e-9)


@pytest.mark.parametrize("name", sorted(BOXES))
def test_continuous_limit(name):
    rng = np.random.default_rng(11)
    taus = np.array([0.1, 0.05, 0.025, 0.0125])
    for _ in range(3):
        sys, x = random_state(rng, name)
        lam = rng.uniform(0.0, 0.3)
        target = sys.f(x) + sys.r(x, lam)
        err = [np.linalg.norm(desingularized_residual(sys, t, x, lam) - target) for t in taus]
        assert np.polyfit(np.log(taus), np.log(err), 1)[0] >= 0.9


def test_residual_batched_matches_columns():
    xs = np.array([[0.2, 1.0, 2.0], [0.3, 0.4, 0.5]])
    batch = desingularized_residual(PP, 0.7, xs, 0.1)
    for j in range(3):
        np.testing.assert_allclose(batch[:, j], desingularized_residual(PP, 0.7, xs[:, j], 0.1),
                                   rtol=1e-8, atol=1e-10)
