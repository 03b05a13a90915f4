from itertools import product

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from helpers import A_E, random_stochastic, random_world
from nbsl import (
    BeliefState,
    ForecastQuery,
    bayesian_update_row,
    diffusion_augmented_pair,
    forecast,
    inertial_augmented,
    influence_lower_bound,
    likelihood_ratio_expectation,
    make_world,
    min_likelihood,
    residual_u,
    sample_signal,
    step_diffusion,
    step_inertial,
    step_standard,
)
from nbsl.dynamics import k0_bound
from nbsl.world import duplicate_agents


def flat_world(n=2, k=2):
    return make_world([f"s{q}" for q in range(k)], 0, [np.full((k, 2), 0.5)] * n)


def test_bu_uninformative_keeps_row():
    w = flat_world(1, 3)
    row = np.array([0.2, 0.3, 0.5])
    assert np.allclose(bayesian_update_row(w, 0, row, 1), row, atol=1e-15)


def test_bu_coin(coin_world):
    assert np.allclose(bayesian_update_row(coin_world, 0, [0.5, 0.5], 0), [0.8, 0.2])


def test_bu_degenerate_prior(coin_world):
    assert np.array_equal(bayesian_update_row(coin_world, 0, [0.0, 1.0], 0), [0.0, 1.0])


def test_standard_identity_is_pure_bayes(coin_world):
    mu = np.array([[0.5, 0.5], [0.3, 0.7]])
    out = step_standard(coin_world, BeliefState(mu), np.eye(2), [0, 1])
    assert np.allclose(out.beliefs[0], bayesian_update_row(coin_world, 0, mu[0], 0))
    assert np.allclose(out.beliefs[1], bayesian_update_row(coin_world, 1, mu[1], 1))
    assert out.time == 1


def test_standard_cycle_ignores_signals():
    w = make_world(["a", "b"], "a", [[[0.9, 0.1], [0.1, 0.9]]] * 3)
    cyc = np.roll(np.eye(3), 1, axis=1)
    mu = np.array([[0.1, 0.9], [0.5, 0.5], [0.7, 0.3]])
    out = step_standard(w, BeliefState(mu), cyc, [0, 0, 1])
    assert np.allclose(out.beliefs, cyc @ mu)


def test_standard_scalar_oracle(coin_world):
    mu = [[0.6, 0.4], [0.25, 0.75]]
    out = step_standard(coin_world, BeliefState(np.array(mu)), A_E, [0, 1]).beliefs
    # agent 0 keeps only its own Bayesian update; agent 1 halves its update with agent 0's prior
    bu0 = [0.8 * 0.6 / (0.8 * 0.6 + 0.2 * 0.4), 0.2 * 0.4 / (0.8 * 0.6 + 0.2 * 0.4)]
    bu1 = [0.2 * 0.25 / (0.2 * 0.25 + 0.8 * 0.75), 0.8 * 0.75 / (0.2 * 0.25 + 0.8 * 0.75)]
    expected = [bu0, [0.5 * bu1[0] + 0.5 * 0.6, 0.5 * bu1[1] + 0.5 * 0.4]]
    assert np.allclose(out, expected, atol=1e-12, rtol=0)


def test_inertial_zero_matches_standard_bitwise(rng):
    w = random_world(rng, 4, 3)
    mu = rng.dirichlet(np.ones(3), size=4)
    a = random_stochastic(rng, 4)
    sig = sample_signal(w, rng)
    s = step_standard(w, BeliefState(mu), a, sig).beliefs
    i = step_inertial(w, BeliefState(mu), a, 0.0, sig).beliefs
    assert np.array_equal(s, i)


def test_inertial_one_is_degroot(rng):
    w = random_world(rng, 3, 2)
    mu = rng.dirichlet(np.ones(2), size=3)
    a = random_stochastic(rng, 3)
    out = step_inertial(w, BeliefState(mu), a, 1.0, [0, 1, 0]).beliefs
    assert np.allclose(out, a @ mu, atol=1e-15)


def test_inertial_half_oracle(coin_world):
    mu = np.array([[0.6, 0.4], [0.25, 0.75]])
    a = np.array([[0.7, 0.3], [0.4, 0.6]])
    out = step_inertial(coin_world, BeliefState(mu), a, 0.5, [0, 0]).beliefs
    for i in range(2):
        bu = bayesian_update_row(coin_world, i, mu[i], 0)
        expected = a[i, i] * (0.5 * mu[i] + 0.5 * bu) + a[i, 1 - i] * mu[1 - i]
        assert np.allclose(out[i], expected, atol=1e-12, rtol=0)


def test_inertial_rejects_bad_lambda(coin_world):
    with pytest.raises(ValueError):
        step_inertial(coin_world, BeliefState(np.full((2, 2), 0.5)), np.eye(2), 1.2, [0, 0])


def test_diffusion_identity_equals_standard(rng):
    w = random_world(rng, 3, 3)
    mu = rng.dirichlet(np.ones(3), size=3)
    sig = sample_signal(w, rng)
    d = step_diffusion(w, BeliefState(mu), np.eye(3), sig).beliefs
    s = step_standard(w, BeliefState(mu), np.eye(3), sig).beliefs
    assert np.allclose(d, s, atol=1e-15)


def test_diffusion_uninformative_is_mixing(rng):
    w = flat_world(3, 3)
    mu = rng.dirichlet(np.ones(3), size=3)
    a = random_stochastic(rng, 3)
    assert np.allclose(step_diffusion(w, BeliefState(mu), a, [0, 1, 1]).beliefs, a @ mu, atol=1e-15)


def test_diffusion_matches_augmented_chain(rng):
    n = 3
    w = random_world(rng, n, 3)
    big = duplicate_agents(w)
    mu = rng.dirichlet(np.ones(3), size=n)
    aug = np.vstack([mu, mu])
    for t in range(100):
        a = random_stochastic(rng, n, 0.3)
        sig = sample_signal(w, rng)
        mu = step_diffusion(w, BeliefState(mu), a, sig).beliefs
        even, odd = diffusion_augmented_pair(a)
        # odd augmented time: identity matrix, pure Bayesian step on both copies
        aug = step_standard(big, BeliefState(aug), odd, np.concatenate([sig, sig])).beliefs
        # next even time: zero self-weights, signals unused
        aug = step_standard(big, BeliefState(aug), even, np.zeros(2 * n, dtype=int)).beliefs
        assert np.allclose(aug[:n], mu, atol=1e-12, rtol=0)
        assert np.allclose(aug[n:], mu, atol=1e-12, rtol=0)


def test_inertial_matches_augmented_chain(rng):
    n = 4
    w = random_world(rng, n, 2)
    big = duplicate_agents(w)
    mu = rng.dirichlet(np.ones(2), size=n)
    aug = np.vstack([mu, mu])
    lam = rng.random(n) * 0.9
    for _ in range(100):
        a = random_stochastic(rng, n, 0.3)
        sig = sample_signal(w, rng)
        mu = step_inertial(w, BeliefState(mu), a, lam, sig).beliefs
        aug = step_standard(big, BeliefState(aug), inertial_augmented(a, lam), np.concatenate([sig, sig])).beliefs
        assert np.allclose(aug[:n], mu, atol=1e-12, rtol=0)


def test_forecast_uniform_prior(coin_world):
    assert forecast(coin_world, 0, [0.5, 0.5], ForecastQuery(0, (0,))) == pytest.approx(0.5)


def test_forecast_degenerate_at_truth(coin_world):
    assert forecast(coin_world, 0, [1.0, 0.0], ForecastQuery(0, (0, 1, 0))) == pytest.approx(0.8 * 0.2 * 0.8)


def test_forecast_two_steps_enumeration(rng):
    w = random_world(rng, 1, 3, signals=3)
    row = rng.dirichlet(np.ones(3))
    lik = w.likelihoods[0]
    for s1, s2 in product(range(3), repeat=2):
        oracle = 0.0
        for theta in range(3):
            oracle += lik[theta, s1] * lik[theta, s2] * row[theta]
        assert forecast(w, 0, row, (s1, s2)) == pytest.approx(oracle, abs=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(2, 3))
def test_forecasts_sum_to_one(seed, k, signals):
    rng = np.random.default_rng(seed)
    w = random_world(rng, 1, 3, signals=signals)
    row = rng.dirichlet(np.ones(3))
    total = sum(forecast(w, 0, row, seq) for seq in product(range(signals), repeat=k))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_residual_zero_at_truth(rng):
    w = random_world(rng, 3, 3)
    mu = np.tile([1.0, 0.0, 0.0], (3, 1))
    assert np.allclose(residual_u(w, mu, random_stochastic(rng, 3), [0, 1, 0]), 0)


def test_residual_zero_without_self_weight(rng):
    w = random_world(rng, 3, 3)
    mu = rng.dirichlet(np.ones(3), size=3)
    cyc = np.roll(np.eye(3), 1, axis=1)
    assert np.all(residual_u(w, mu, cyc, [0, 1, 0]) == 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 4))
def test_residual_reconstructs_true_column(seed, n, k):
    rng = np.random.default_rng(seed)
    w = random_world(rng, n, k)
    mu = rng.dirichlet(np.ones(k), size=n)
    a = random_stochastic(rng, n, 0.3)
    sig = sample_signal(w, rng)
    nxt = step_standard(w, BeliefState(mu), a, sig).beliefs
    u = residual_u(w, mu, a, sig)
    assert np.allclose(nxt[:, 0], a @ mu[:, 0] + u, atol=1e-12, rtol=0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 4), st.sampled_from(["std", "inert", "diff"]))
@example(2, 5, 2, "std")  # mixing near 1 used to overshoot by one ulp
def test_steps_keep_rows_stochastic_and_zeros(seed, n, k, rule):
    rng = np.random.default_rng(seed)
    w = random_world(rng, n, k)
    mu = rng.dirichlet(np.ones(k), size=n)
    mu[:, k - 1] = 0.0  # globally ruled out
    mu /= mu.sum(axis=1, keepdims=True)
    a = random_stochastic(rng, n, 0.4)
    sig = sample_signal(w, rng)
    state = BeliefState(mu)
    if rule == "std":
        out = step_standard(w, state, a, sig)
    elif rule == "inert":
        out = step_inertial(w, state, a, rng.random(n), sig)
    else:
        out = step_diffusion(w, state, a, sig)
    assert np.all(np.abs(out.beliefs.sum(axis=1) - 1) <= 1e-12)
    assert np.all(out.beliefs[:, k - 1] == 0)
    assert np.all((out.beliefs >= 0) & (out.beliefs <= 1))
    assert out.drift < 1e-12


def _trajectory(rng, w, n, steps):
    mats = [random_stochastic(rng, n, 0.5) for _ in range(steps)]
    trace = [rng.dirichlet(np.ones(w.n_states), size=n)]
    for a in mats:
        trace.append(step_standard(w, BeliefState(trace[-1]), a, sample_signal(w, rng)).beliefs)
    return mats, trace


def test_influence_zero_weight_trivial(rng):
    w = random_world(rng, 2, 2)
    mats = [np.eye(2)] * 3
    trace = [np.full((2, 2), 0.5)] * 4
    res = influence_lower_bound(mats, w, 0, 1, 0, 2, 2, trace)
    assert np.all(res.bound == 0) and res.holds


def test_influence_single_agent_single_step(coin_world):
    mu = np.array([[0.3, 0.7], [0.5, 0.5]])
    nxt = step_standard(coin_world, BeliefState(mu), np.eye(2), [1, 0]).beliefs
    res = influence_lower_bound([np.eye(2)], coin_world, 0, 0, 0, 1, 1, [mu, nxt])
    l0 = min_likelihood(coin_world)
    assert np.allclose(res.bound, (l0 / 2) * 2 * mu[0])
    assert res.holds


def test_influence_rejects_long_delta(coin_world):
    with pytest.raises(ValueError):
        influence_lower_bound([np.eye(2)] * 5, coin_world, 0, 0, 0, 3, 2, [np.eye(2)] * 6)


def test_influence_random_sweep():
    rng = np.random.default_rng(9)
    w = random_world(rng, 4, 3)
    mats, trace = _trajectory(rng, w, 4, 60)
    for _ in range(2000):
        B = int(rng.integers(1, 4))
        d = int(rng.integers(1, B + 1))
        t = int(rng.integers(0, 60 - d))
        i, j = rng.integers(0, 4, 2)
        assert influence_lower_bound(mats, w, int(i), int(j), t, d, B, trace).holds


def test_k0_zero_at_truth(rng):
    w = random_world(rng, 2, 3)
    assert likelihood_ratio_expectation(w, 0, [1.0, 0.0, 0.0], 0) == pytest.approx(0, abs=1e-15)


def test_k0_uninformative_zero():
    w = flat_world(1, 3)
    for theta in range(3):
        assert likelihood_ratio_expectation(w, 0, [0.2, 0.3, 0.5], theta) == pytest.approx(0, abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_k0_bounds(seed):
    rng = np.random.default_rng(seed)
    w = random_world(rng, 2, 4, signals=3, equal_pairs=2)
    row = rng.dirichlet(np.full(4, 0.5))
    for theta in range(4):
        g = likelihood_ratio_expectation(w, 0, row, theta)
        assert g <= k0_bound(w) + 1e-12
        if theta in w.equivalence.theta_star_i[0]:
            assert g >= -1e-12
