import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadenet.equilibria import enumerate_equilibria, make_translated, stable_equilibria, translate
from cascadenet.errors import MonotoneViolation, NonMonotoneTrace
from cascadenet.scenario_io import load_bundled
from cascadenet.signiter import (
    ALWAYS_NEGATIVE,
    ALWAYS_POSITIVE,
    UNDETERMINED,
    as_sign_vector,
    attractors,
    fixed_sign_classification,
    is_fixed_point,
    iterate_best,
    iterate_worst,
    monotone_run,
    psi,
    sign,
    sign_step,
)
from netgen import random_network
from oracles import sign_fixed_points

EX1 = translate(load_bundled("example1_short").network)


@pytest.fixture(scope="module")
def sim1():
    return translate(load_bundled("example3_sim1").network)


@pytest.fixture(scope="module")
def sim2():
    return translate(load_bundled("example3_sim2").network)


def test_sign_convention():
    np.testing.assert_array_equal(sign([-1, 0, 2, -1e-13, 1e-13]), [-1, 1, 1, 1, 1])
    with pytest.raises(ValueError):
        as_sign_vector([1, 0])


def test_psi():
    n = EX1.n
    np.testing.assert_array_equal(psi(EX1, np.ones(n)), EX1.r)
    np.testing.assert_array_equal(psi(EX1, -np.ones(n)), EX1.r - EX1.beta)
    np.testing.assert_array_equal(psi(EX1, [1, -1]), [EX1.r[0], EX1.r[1] - EX1.beta[1]])


def test_sign_step_regimes(sim1, sim2):
    n = sim1.n
    sigma = -np.ones(n, dtype=np.int8)
    for _ in range(n + 1):
        sigma = sign_step(sim1, sigma)
    assert np.all(sigma == 1)
    assert np.all(sign_step(sim2, -np.ones(n)) == -1)
    assert is_fixed_point(sim1, np.ones(n))


def test_worst_from_positive_margin():
    rng = np.random.default_rng(4)
    C = rng.uniform(0, 0.1, (5, 5))
    np.fill_diagonal(C, 0)
    beta = rng.uniform(0.1, 1, 5)
    ts = make_translated(C, beta + 0.1, beta)
    tr = iterate_worst(ts)
    assert np.all(tr.sequence[1] == 1)
    assert tr.iterations == 2  # one flip, then the confirming step
    assert np.all(iterate_best(ts).fixed_point == 1)


def test_safe_nodes_persist():
    # nodes 2, 5, 6 (1-based) have a small failure cost, so they are safe on the
    # first step and stay safe; the rest hold shares of node 2 but still fail
    n = 8
    C = np.zeros((n, n))
    r = np.full(n, 0.5)
    beta = np.full(n, 1.0)
    for i in (1, 4, 5):
        beta[i] = 0.2
    for i in (0, 2, 3, 6, 7):
        C[i, 1] = 0.15
    ts = make_translated(C, r, beta)
    tr = iterate_worst(ts)
    np.testing.assert_array_equal(tr.sequence[1], [-1, 1, -1, -1, 1, 1, -1, -1])
    assert tr.safe_sets[1] == {1, 4, 5}
    for a, b in zip(tr.safe_sets, tr.safe_sets[1:]):
        assert a <= b
    assert {1, 4, 5} <= tr.safe_sets[-1]


def test_example3_traces(sim1, sim2):
    assert np.all(iterate_worst(sim2).fixed_point == -1)
    assert np.all(iterate_best(sim2).fixed_point == -1)
    assert np.all(iterate_worst(sim1).fixed_point == 1)
    assert fixed_sign_classification(sim1) == [ALWAYS_POSITIVE] * 20
    assert fixed_sign_classification(sim2) == [ALWAYS_NEGATIVE] * 20


def test_classification_decoupled():
    ts = make_translated(np.zeros((3, 3)), [1, -1, 0.2], [0.5, 0.5, 0.5])
    assert fixed_sign_classification(ts) == [ALWAYS_POSITIVE, ALWAYS_NEGATIVE, UNDETERMINED]


def test_attractors_unique_regimes(sim1, sim2):
    a = attractors(sim1)
    np.testing.assert_allclose(a.x_worst, sim1.Pr, atol=1e-12)
    np.testing.assert_allclose(a.x_best, sim1.Pr, atol=1e-12)
    assert np.all(a.x_worst >= 0)
    b = attractors(sim2)
    np.testing.assert_allclose(b.x_worst, sim2.P_r_minus_beta, atol=1e-12)
    np.testing.assert_allclose(b.x_best, sim2.P_r_minus_beta, atol=1e-12)
    assert np.all(b.x_best < 0)
    np.testing.assert_allclose(b.v_best(sim2), b.x_best + 10.0)


def test_monotone_run_detects_violation():
    ts = make_translated(np.zeros((1, 1)), [1.0], [0.5])
    with pytest.raises(MonotoneViolation):
        monotone_run(ts, [5.0], "worst")  # x jumps down to 1
    end, steps = monotone_run(ts, [5.0], "best")
    assert end[0] == 1.0 and steps == 2


def test_iteration_cap():
    # a non-Metzler "P" breaks monotonicity and must trip the internal assertion
    ts = make_translated(np.zeros((2, 2)), [1.0, 1.0], [2.0, 2.0])
    object.__setattr__(ts, "P", np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(NonMonotoneTrace):
        iterate_worst(ts)


def _sigma_strategy():
    return st.integers(2, 10).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, 2**32 - 1), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1))
    )


@settings(max_examples=100, deadline=None)
@given(_sigma_strategy())
def test_sign_step_monotone(args):
    n, seed, a, b = args
    ts = translate(random_network(np.random.default_rng(seed), n))
    bits = lambda k: np.array([1 if (k >> i) & 1 else -1 for i in range(n)], dtype=np.int8)
    lo = bits(a & b)
    hi = bits(a | b)
    for _ in range(n + 2):
        assert np.all(lo <= hi)
        lo, hi = sign_step(ts, lo), sign_step(ts, hi)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 2**32 - 1))
def test_traces_and_bounds(n, seed):
    ts = translate(random_network(np.random.default_rng(seed), n))
    w, b = iterate_worst(ts), iterate_best(ts)
    assert w.iterations <= n + 1 and b.iterations <= n + 1
    assert all(x <= y for x, y in zip(w.safe_sets, w.safe_sets[1:]))
    assert all(x >= y for x, y in zip(b.safe_sets, b.safe_sets[1:]))
    assert is_fixed_point(ts, w.fixed_point) and is_fixed_point(ts, b.fixed_point)
    assert np.all(w.fixed_point <= b.fixed_point)
    a = attractors(ts)
    assert np.all(a.x_worst <= a.x_best)
    for sigma in sign_fixed_points(ts.P, ts.r, ts.beta):
        assert np.all(w.fixed_point <= sigma) and np.all(np.array(sigma) <= b.fixed_point)
    for e in stable_equilibria(enumerate_equilibria(ts)):
        assert np.all(a.x_worst <= e.x_bar + 1e-12) and np.all(e.x_bar <= a.x_best + 1e-12)
