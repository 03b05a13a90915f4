"""States, private signal structures and observational equivalence.

A world is a finite state set, the index of the true state, and for each
agent a likelihood table ``l_i(s | theta)`` over that agent's finite signal
space.  Signals are drawn either as a product of the per-agent marginals
(the default) or from an explicit joint table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

EQUIVALENCE_TOL = 1e-12
ROW_SUM_TOL = 1e-12
JOINT_MARGINAL_TOL = 1e-9


class WorldModelError(ValueError):
    """Raised when a world violates one of its construction invariants."""


@dataclass(frozen=True)
class EquivalenceStructure:
    theta_star_i: tuple[frozenset[int], ...]
    theta_star: frozenset[int]
    identifiable: bool


@dataclass(frozen=True, eq=False)
class WorldModel:
    """Finite world with per-agent likelihood tables.

    Parameters
    ----------
    states : sequence of str
        State labels, in index order.
    true_state : int
        Index of the true state in ``states``.
    signals : sequence of sequence of str
        Signal labels of each agent.
    likelihoods : sequence of array_like
        ``likelihoods[i][theta, s]`` is ``l_i(s | theta)``.
    joint : array_like, optional
        Joint table of shape ``(n_states, |S_1|, ..., |S_n|)``.  When given,
        signals are drawn from ``joint[true_state]`` instead of the product
        of the marginals.
    """

    states: tuple[str, ...]
    true_state: int
    signals: tuple[tuple[str, ...], ...]
    likelihoods: tuple[np.ndarray, ...]
    joint: np.ndarray | None = None
    _padded: np.ndarray = field(init=False, repr=False)
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        signals = tuple(tuple(str(s) for s in sig) for sig in self.signals)
        liks = tuple(np.array(l, dtype=float) for l in self.likelihoods)
        for arr in liks:
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "likelihoods", liks)

        if len(states) == 0:
            raise WorldModelError("world needs at least one state")
        if len(set(states)) != len(states):
            raise WorldModelError("state labels must be unique")
        if not 0 <= self.true_state < len(states):
            raise WorldModelError(f"true_state index {self.true_state} out of range")
        if len(signals) == 0:
            raise WorldModelError("world needs at least one agent")
        if len(liks) != len(signals):
            raise WorldModelError("one likelihood table per agent is required")

        for i, (sig, lik) in enumerate(zip(signals, liks)):
            if len(sig) == 0:
                raise WorldModelError(f"agent {i}: empty signal space")
            if lik.shape != (len(states), len(sig)):
                raise WorldModelError(
                    f"agent {i}: likelihood table has shape {lik.shape}, "
                    f"expected {(len(states), len(sig))}"
                )
            for k, row in enumerate(lik):
                if np.any(row <= 0.0):
                    raise WorldModelError(
                        f"agent {i}, state {states[k]!r}: likelihoods must be strictly positive"
                    )
                if abs(row.sum() - 1.0) > ROW_SUM_TOL:
                    raise WorldModelError(
                        f"agent {i}, state {states[k]!r}: likelihood row sums to {row.sum():.12g}"
                    )

        if self.joint is not None:
            joint = np.array(self.joint, dtype=float)
            expected = (len(states),) + tuple(len(s) for s in signals)
            if joint.shape != expected:
                raise WorldModelError(f"joint table has shape {joint.shape}, expected {expected}")
            if np.any(joint < 0):
                raise WorldModelError("joint table has negative entries")
            n = len(signals)
            for i in range(n):
                axes = tuple(1 + k for k in range(n) if k != i)
                marg = joint.sum(axis=axes) if axes else joint
                if np.max(np.abs(marg - liks[i])) > JOINT_MARGINAL_TOL:
                    raise WorldModelError(
                        f"joint table marginal for agent {i} disagrees with its likelihoods"
                    )
            joint.setflags(write=False)
            object.__setattr__(self, "joint", joint)

        # padded[i, s, theta] = l_i(s|theta); padding never indexed
        width = max(len(s) for s in signals)
        padded = np.ones((len(signals), width, len(states)))
        cdf = np.full((len(signals), width), np.inf)
        for i, lik in enumerate(liks):
            padded[i, : lik.shape[1], :] = lik.T
            c = np.cumsum(lik[self.true_state])
            c[-1] = np.inf  # absorb round-off so u < 1 always lands in range
            cdf[i, : len(c)] = c
        padded.setflags(write=False)
        object.__setattr__(self, "_padded", padded)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def n_agents(self) -> int:
        return len(self.signals)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def joint_mode(self) -> str:
        return "product" if self.joint is None else "joint"

    def likelihood_columns(self, signals: np.ndarray) -> np.ndarray:
        """Return the ``(n, n_states)`` matrix ``l_i(signals[i] | theta)``."""
        return self._padded[np.arange(self.n_agents), np.asarray(signals), :]

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise WorldModelError(f"unknown state {label!r}") from None

    @cached_property
    def equivalence(self) -> EquivalenceStructure:
        per_agent = tuple(frozenset(theta_star_set(self, i)) for i in range(self.n_agents))
        common = frozenset.intersection(*per_agent)
        return EquivalenceStructure(per_agent, common, common == {self.true_state})


def theta_star_set(world: WorldModel, agent: int) -> set[int]:
    """States that agent ``agent`` cannot tell apart from the true state."""
    lik = world.likelihoods[agent]
    ref = lik[world.true_state]
    return {k for k in range(world.n_states) if np.max(np.abs(lik[k] - ref)) <= EQUIVALENCE_TOL}


def is_self_sufficient(world: WorldModel, agents: Iterable[int]) -> bool:
    agents = set(agents)
    if not agents:
        raise ValueError("self-sufficiency is undefined for an empty agent set")
    eq = world.equivalence
    pooled = frozenset.intersection(*(eq.theta_star_i[j] for j in agents))
    return pooled == eq.theta_star


def is_identifiable(world: WorldModel) -> bool:
    return world.equivalence.identifiable


def min_likelihood(world: WorldModel) -> float:
    """Smallest likelihood entry over all agents, states and signals."""
    l0 = min(float(lik.min()) for lik in world.likelihoods)
    if l0 <= 0.0:
        raise WorldModelError("likelihood tables contain a non-positive entry")
    return l0


def sample_signal(world: WorldModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one signal index per agent from ``l(. | true state)``."""
    if world.joint is None:
        u = rng.random(world.n_agents)
        return (u[:, None] >= world._cdf).sum(axis=1)
    table = world.joint[world.true_state]
    flat = rng.choice(table.size, p=table.ravel() / table.sum())
    return np.array(np.unravel_index(flat, table.shape))


def duplicate_agents(world: WorldModel) -> WorldModel:
    """World with each agent copied, agent ``i + n`` mirroring agent ``i``.

    Used with the augmented 2n-agent chains; the copies observe exactly what
    the originals observe, so only product mode is meaningful here.
    """
    return WorldModel(
        states=world.states,
        true_state=world.true_state,
        signals=world.signals + world.signals,
        likelihoods=world.likelihoods + world.likelihoods,
    )


def make_world(
    states: Sequence[str],
    true_state: str | int,
    likelihoods: Sequence[np.ndarray],
    signals: Sequence[Sequence[str]] | None = None,
    joint: np.ndarray | None = None,
) -> WorldModel:
    """Convenience constructor accepting a state label and default signal names."""
    states = tuple(states)
    ts = states.index(true_state) if isinstance(true_state, str) else int(true_state)
    liks = [np.asarray(l, dtype=float) for l in likelihoods]
    if signals is None:
        signals = [tuple(f"s{k}" for k in range(l.shape[1])) for l in liks]
    return WorldModel(states, ts, tuple(tuple(s) for s in signals), tuple(liks), joint)
