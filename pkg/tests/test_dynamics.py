import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadenet.dynamics import (
    PriceOverride,
    PriceSignal,
    check_positivity_condition,
    positivity_margin,
    simulate,
    step,
)
from cascadenet.errors import LengthMismatch, ValidationFailure
from cascadenet.model import FinancialNetwork, failure_indicator
from cascadenet.numerics import invert_i_minus_c
from cascadenet.scenario_io import load_bundled
from netgen import positive_network, random_network
from oracles import gauss_solve

EX1 = load_bundled("example1_short").network
EX2 = load_bundled("example2")


def test_step_fixed_at_healthy_equilibrium():
    # hand 2x2 inverse: (I - C)^{-1} = [[1, .025], [.005, 1]] / (1 - .000125)
    V = np.array([2 * 1.025, 2 * 1.005]) / (1 - 0.000125)
    np.testing.assert_allclose(V, [2.0503, 2.0103], atol=1e-4)
    np.testing.assert_allclose(step(EX1, V, [20, 20]), V, rtol=0, atol=1e-12)


def test_step_decoupled_below_threshold():
    net = FinancialNetwork(np.zeros((3, 3)), np.eye(3), [1, 2, 3], [0.5, 0.5, 0.5], [10, 10, 10])
    np.testing.assert_allclose(step(net, np.zeros(3), net.p), [0.5, 1.5, 2.5])


def test_step_length_checks():
    with pytest.raises(LengthMismatch):
        step(EX1, [1, 2, 3], [20, 20])
    with pytest.raises(LengthMismatch):
        step(EX1, [1, 2], [20])


def test_step_boundary_is_healthy():
    V = np.array([1.5, 1.5])
    expected = EX1.C @ V + EX1.Dp
    np.testing.assert_array_equal(step(EX1, V, [20, 20]), expected)


def test_example2_step_nonnegative():
    rng = np.random.default_rng(0)
    net = EX2.network
    for _ in range(50):
        V = rng.uniform(0, 30, net.n)
        assert np.all(step(net, V, net.p) >= 0)


def test_positivity_condition():
    net = EX2.network
    assert check_positivity_condition(net)
    np.testing.assert_allclose(positivity_margin(net), 4.0)
    big = FinancialNetwork(net.C, net.D, net.p, net.beta * 100, net.v_threshold)
    assert not check_positivity_condition(big)
    tight = FinancialNetwork(np.zeros((2, 2)), np.eye(2), [1, 2], [1, 2], [0, 0])
    assert check_positivity_condition(tight)


def test_price_signal():
    ps = PriceSignal((20.0, 20.0), (PriceOverride(4, 5, (14.9, 14.9)),))
    assert list(ps.at(3)) == [20, 20]
    assert list(ps.at(4)) == [14.9, 14.9]
    assert list(ps.at(5)) == [20, 20]
    assert ps.last_change() == 5
    assert PriceSignal.constant([1, 2]).last_change() == 0


@pytest.mark.parametrize(
    "overrides",
    [
        (PriceOverride(4, 4, (1.0,)),),
        (PriceOverride(2, 6, (1.0,)), PriceOverride(5, 8, (1.0,))),
        (PriceOverride(5, 8, (1.0,)), PriceOverride(1, 2, (1.0,))),
        (PriceOverride(1, 2, (-1.0,)),),
        (PriceOverride(1, 2, (0.0,)),),
        (PriceOverride(1, 2, (1.0, 2.0)),),
    ],
)
def test_price_signal_rejects(overrides):
    with pytest.raises(ValidationFailure):
        PriceSignal((1.0,), overrides)


def test_example1_scenarios():
    for name, failed in (("example1_short", 0), ("example1_long", 1)):
        sc = load_bundled(name)
        traj = simulate(sc.network, sc.V0, sc.price_signal, sc.horizon)
        assert traj.converged
        assert len(traj.failed_set()) == failed
        assert traj.settle_time >= sc.price_signal.last_change()


def test_simulate_at_fixed_point_settles_immediately():
    V = invert_i_minus_c(EX1.C) @ EX1.Dp
    traj = simulate(EX1, V, horizon=20)
    assert traj.converged and traj.settle_time == 0
    assert traj.horizon == 20 and traj.states.shape == (21, 2)


def test_simulate_not_converged_when_horizon_short():
    traj = simulate(EX1, [5.0, 5.0], horizon=3)
    assert not traj.converged and traj.settle_time is None


def test_simulate_rejects_bad_inputs():
    with pytest.raises(ValueError):
        simulate(EX1, [2, 2], horizon=0)
    with pytest.raises(LengthMismatch):
        simulate(EX1, [2, 2, 2])
    with pytest.raises(LengthMismatch):
        simulate(EX1, [2, 2], PriceSignal.constant([1.0]))


def test_trajectory_replays_and_indicators_match():
    sc = load_bundled("example1_long")
    traj = simulate(sc.network, sc.V0, sc.price_signal, sc.horizon)
    for t in range(traj.horizon):
        nxt = step(sc.network, traj.states[t], sc.price_signal.at(t))
        np.testing.assert_array_equal(traj.states[t + 1], nxt)
        np.testing.assert_array_equal(traj.indicators[t], failure_indicator(traj.states[t], sc.network.v_threshold))
    st0 = traj.state(0)
    assert st0.t == 0 and np.array_equal(st0.V, sc.V0)


def test_converged_state_satisfies_equilibrium_equation():
    sc = load_bundled("countries9")
    net = sc.network
    traj = simulate(net, sc.V0, sc.price_signal, sc.horizon)
    assert traj.converged
    phi = traj.indicators[-1]
    V = gauss_solve(np.eye(net.n) - net.C, net.Dp - net.beta * phi)
    assert np.max(np.abs(traj.final - V)) < 1e-8


def test_replay_determinism():
    net = EX2.network
    a = simulate(net, EX2.V0, horizon=50)
    b = simulate(net, EX2.V0, horizon=50)
    assert a == b
    assert a.states.tobytes() == b.states.tobytes()


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_positivity_property(n, seed):
    rng = np.random.default_rng(seed)
    net = positive_network(rng, n)
    assert check_positivity_condition(net)
    traj = simulate(net, rng.uniform(0, 5, n), horizon=60)
    assert np.all(traj.states >= -1e-12)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_monotone_in_initial_condition(n, seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n)
    V0 = net.v_threshold + rng.normal(0, 1, n)
    V1 = V0 + rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.6)
    a = simulate(net, V0, horizon=40)
    b = simulate(net, V1, horizon=40)
    assert np.all(b.states >= a.states)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_orthant_segment_contracts(n, seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n)
    P = invert_i_minus_c(net.C)
    norm1 = np.abs(net.C).sum(axis=0).max()
    traj = simulate(net, net.v_threshold + rng.normal(0, 2, n), horizon=30)
    for t in range(traj.horizon):
        phi = traj.indicators[t]
        if not np.array_equal(phi, traj.indicators[t + 1]):
            continue
        eq = P @ (net.Dp - net.beta * phi)
        y0 = np.abs(traj.states[t] - eq).sum()
        y1 = np.abs(traj.states[t + 1] - eq).sum()
        assert y1 <= norm1 * y0 + 1e-9
