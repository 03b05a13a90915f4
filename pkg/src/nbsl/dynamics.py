"""Belief updates, forecasts, the linearization residual and inequality monitors.

Array-level functions take an ``(n, n_states)`` belief matrix and return a new
one.  ``BeliefState`` wraps a matrix with its time stamp and the largest row
sum drift seen before renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .world import WorldModel, min_likelihood, theta_star_set

RENORM_TOL = 1e-12
INFLUENCE_TOL = 1e-9


@dataclass(frozen=True)
class BeliefState:
    beliefs: np.ndarray
    time: int = 0
    drift: float = 0.0


@dataclass(frozen=True)
class ForecastQuery:
    agent: int
    signals: tuple[int, ...]

    @property
    def horizon(self) -> int:
        return len(self.signals)


def renormalize(mu: np.ndarray) -> tuple[np.ndarray, float]:
    # the cancellation in _mix can land one ulp outside [0, 1]
    mu = np.clip(mu, 0.0, 1.0)
    sums = mu.sum(axis=1)
    drift = float(np.max(np.abs(sums - 1.0)))
    if drift > RENORM_TOL:
        mu = mu / sums[:, None]
    return mu, drift


def bayesian_update_row(world: WorldModel, agent: int, row, signal: int) -> np.ndarray:
    lik = world.likelihoods[agent][:, signal]
    post = lik * np.asarray(row, dtype=float)
    return post / post.sum()


def bayesian_update(world: WorldModel, mu: np.ndarray, signals) -> np.ndarray:
    """Every agent's Bayesian posterior from its own signal."""
    post = world.likelihood_columns(signals) * mu
    return post / post.sum(axis=1, keepdims=True)


def _mix(a: np.ndarray, own: np.ndarray, mu: np.ndarray) -> np.ndarray:
    diag = np.diag(a)
    return diag[:, None] * own + (a @ mu - diag[:, None] * mu)


def standard_update(world, mu, a, signals) -> np.ndarray:
    a = np.asarray(a)
    return _mix(a, bayesian_update(world, mu, signals), mu)


def inertial_update(world, mu, a, lam, signals) -> np.ndarray:
    a = np.asarray(a)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (mu.shape[0],))
    if np.any(lam < 0) or np.any(lam > 1):
        raise ValueError("inertia values must lie in [0, 1]")
    bu = bayesian_update(world, mu, signals)
    return _mix(a, lam[:, None] * mu + (1 - lam)[:, None] * bu, mu)


def diffusion_update(world, mu, a, signals) -> np.ndarray:
    return np.asarray(a) @ bayesian_update(world, mu, signals)


def _wrap(state: BeliefState, new: np.ndarray) -> BeliefState:
    new, drift = renormalize(new)
    return BeliefState(new, state.time + 1, max(state.drift, drift))


def step_standard(world, state: BeliefState, a, signals) -> BeliefState:
    return _wrap(state, standard_update(world, state.beliefs, a, signals))


def step_inertial(world, state: BeliefState, a, lam, signals) -> BeliefState:
    return _wrap(state, inertial_update(world, state.beliefs, a, lam, signals))


def step_diffusion(world, state: BeliefState, a, signals) -> BeliefState:
    return _wrap(state, diffusion_update(world, state.beliefs, a, signals))


def forecast(world: WorldModel, agent: int, row, query: ForecastQuery | Sequence[int]) -> float:
    """Probability the agent assigns to seeing ``signals`` over its next steps."""
    sig = query.signals if isinstance(query, ForecastQuery) else tuple(query)
    if len(sig) == 0:
        raise ValueError("forecast needs at least one signal")
    lik = world.likelihoods[agent]
    joint = np.prod(lik[:, list(sig)], axis=1)
    return float(joint @ np.asarray(row, dtype=float))


def one_step_forecasts(world: WorldModel, mu: np.ndarray, signals) -> np.ndarray:
    """``m_i(omega_i)`` for every agent."""
    return np.einsum("ik,ik->i", world.likelihood_columns(signals), mu)


def residual_u(world: WorldModel, mu: np.ndarray, a, signals) -> np.ndarray:
    """Nonlinear term in ``mu_{t+1}(true) = A mu_t(true) + u``."""
    if isinstance(mu, BeliefState):
        mu = mu.beliefs
    ts = world.true_state
    lik_true = world.likelihood_columns(signals)[:, ts]
    m = one_step_forecasts(world, mu, signals)
    return np.diag(np.asarray(a)) * (lik_true / m - 1.0) * mu[:, ts]


@dataclass(frozen=True)
class InfluenceCheck:
    bound: np.ndarray
    actual: np.ndarray
    holds: bool


def influence_lower_bound(
    window: Sequence[np.ndarray],
    world: WorldModel,
    i: int,
    j: int,
    t: int,
    delta: int,
    B: int,
    trace: Sequence[np.ndarray],
) -> InfluenceCheck:
    """Compare ``mu_{j,t+delta}`` with the product-weight lower bound in terms of ``mu_{i,t}``.

    ``window[s]`` is ``A(s)`` and ``trace[s]`` the belief matrix at time ``s``.
    """
    if delta > B or delta < 0:
        raise ValueError(f"delta={delta} must lie in [0, B={B}]")
    if t + delta >= len(trace) or t + delta > len(window):
        raise ValueError("trace or window too short for the requested horizon")
    n = world.n_agents
    prod = np.eye(n)
    for s in range(t, t + delta):
        prod = np.asarray(window[s]) @ prod
    l0 = min_likelihood(world)
    bound = prod[j, i] * (l0 / n) ** B * n * np.asarray(trace[t])[i]
    actual = np.asarray(trace[t + delta])[j]
    return InfluenceCheck(bound, actual, bool(np.all(actual >= bound - INFLUENCE_TOL)))


def likelihood_ratio_expectation(world: WorldModel, agent: int, row, theta: int) -> float:
    """Expected value of ``l(s|theta)/m(s) - 1`` with ``s`` drawn from the true-state law."""
    lik = world.likelihoods[agent]
    m = lik.T @ np.asarray(row, dtype=float)
    return float(lik[world.true_state] @ (lik[theta] / m - 1.0))


def k0_bound(world: WorldModel) -> float:
    return 1.0 / min_likelihood(world) - 1.0


def k0_violation(world: WorldModel, agent: int, row, theta: int, tol: float = 1e-12) -> bool:
    g = likelihood_ratio_expectation(world, agent, row, theta)
    if g > k0_bound(world) + tol:
        return True
    return theta in theta_star_set(world, agent) and g < -tol
