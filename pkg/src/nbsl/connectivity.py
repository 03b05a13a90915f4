"""Connectivity certificates: gamma-epochs, B-connectivity, balance, feedback, APS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .world import WorldModel, is_self_sufficient

EPOCH_REL_SLACK = 1e-12
APS_TOL = 1e-12
APS_MAX_ITER = 1_000_000
APS_AGREE_TOL = 1e-9
APS_VERIFY_TOL = 1e-10
MAX_BALANCE_N = 16


class ApsError(RuntimeError):
    """Raised when the APS solver finds no unique fixed vector or does not converge."""


@dataclass(frozen=True)
class Witness:
    agent: int
    time: int
    self_weight: float
    influence: float


@dataclass(frozen=True)
class EpochCertificate:
    t_s: int
    t_f: int
    gamma: float
    witnesses: tuple[tuple[Witness, ...], ...]

    def witness_set(self, i: int) -> frozenset[int]:
        return frozenset(w.agent for w in self.witnesses[i])

    def to_dict(self) -> dict:
        return {
            "t_s": self.t_s,
            "t_f": self.t_f,
            "gamma": self.gamma,
            "witnesses": [
                [
                    {"agent": w.agent, "time": w.time, "self_weight": w.self_weight, "influence": w.influence}
                    for w in ws
                ]
                for ws in self.witnesses
            ],
        }


def _at_least(value, gamma: float):
    # relative slack: gamma can be far below any absolute tolerance
    return value >= gamma * (1 - EPOCH_REL_SLACK)


def epoch_witnesses(window: Sequence[np.ndarray], gamma: float, t_s: int = 0) -> list[list[Witness]]:
    """Witness lists ``W_i`` for a window holding ``A(t_s), ..., A(t_f)``.

    Each agent ``j`` is listed once, at its earliest qualifying time.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if len(window) < 2:
        raise ValueError("window needs at least A(t_s) and A(t_f) with t_s < t_f")
    mats = [np.asarray(m, dtype=float) for m in window]
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise ValueError("window matrices have inconsistent shapes")
    found: list[dict[int, Witness]] = [{} for _ in range(n)]
    prod = np.eye(n)
    for k in range(1, len(mats)):
        prod = mats[k - 1] @ prod  # A(t_s + k : t_s)
        diag = np.diag(mats[k])
        ok = _at_least(diag[:, None], gamma) & _at_least(prod, gamma)  # [j, i]
        for j, i in zip(*np.nonzero(ok)):
            if j not in found[i]:
                found[i][j] = Witness(int(j), t_s + k, float(diag[j]), float(prod[j, i]))
    return [sorted(d.values(), key=lambda w: w.agent) for d in found]


def detect_gamma_epoch(
    window: Sequence[np.ndarray], world: WorldModel, gamma: float, t_s: int = 0
) -> EpochCertificate | None:
    """Certify ``[t_s, t_s + len(window) - 1]`` as a gamma-epoch, or return ``None``."""
    if len(window) and np.asarray(window[0]).shape[0] != world.n_agents:
        raise ValueError("window matrices do not match the number of agents")
    wit = epoch_witnesses(window, gamma, t_s)
    for ws in wit:
        if not ws or not is_self_sufficient(world, {w.agent for w in ws}):
            return None
    return EpochCertificate(t_s, t_s + len(window) - 1, float(gamma), tuple(tuple(ws) for ws in wit))


@dataclass(frozen=True)
class UscVerdict:
    holds: bool
    B: int
    delta: float
    first_failure: tuple[int, str] | None = None

    def to_dict(self) -> dict:
        ff = None if self.first_failure is None else {"window": self.first_failure[0], "reason": self.first_failure[1]}
        return {"holds": self.holds, "B": self.B, "delta": self.delta, "first_failure": ff}


def is_strongly_connected(adj: np.ndarray) -> bool:
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def check_usc(window: Sequence[np.ndarray], B: int, delta: float) -> UscVerdict:
    """Check B-connectivity with entry floor ``delta`` over consecutive length-B blocks."""
    if B < 1 or len(window) % B:
        raise ValueError(f"window length {len(window)} is not a multiple of B={B}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    for k in range(len(window) // B):
        block = [np.asarray(m, dtype=float) for m in window[k * B : (k + 1) * B]]
        union = np.zeros(block[0].shape, dtype=bool)
        for m in block:
            pos = m > 0
            if np.any(pos & (m < delta)):
                return UscVerdict(False, B, delta, (k, "entry-below-floor"))
            if np.any(np.diag(m) <= 0):
                return UscVerdict(False, B, delta, (k, "zero-diagonal"))
            union |= pos
        # arc i -> j iff a_ji > 0, so the adjacency is the transpose
        if not is_strongly_connected(union.T.astype(np.int8)):
            return UscVerdict(False, B, delta, (k, "union-not-strongly-connected"))
    return UscVerdict(True, B, delta)


def max_balance_alpha(m) -> float:
    """Largest alpha with cut outflow >= alpha * cut inflow for every proper subset."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n > MAX_BALANCE_N:
        raise ValueError(f"brute-force balance check supports n <= {MAX_BALANCE_N}, got {n}")
    if n < 2:
        return float("inf")
    codes = np.arange(1, 2**n - 1)
    member = ((codes[:, None] >> np.arange(n)) & 1).astype(float)  # [subset, agent]
    outside = 1.0 - member
    out_flow = np.einsum("ci,ij,cj->c", member, m, outside)
    in_flow = np.einsum("ci,ij,cj->c", outside, m, member)
    bounded = in_flow > 0
    if not np.any(bounded):
        return float("inf")
    return float(np.min(out_flow[bounded] / in_flow[bounded]))


def strong_feedback_floor(window: Sequence[np.ndarray]) -> float:
    if len(window) == 0:
        raise ValueError("window is empty")
    return float(min(np.min(np.diag(np.asarray(m))) for m in window))


@dataclass(frozen=True)
class ApsSequence:
    period: int
    vectors: tuple[np.ndarray, ...]
    p_star: float

    def at(self, t: int) -> np.ndarray:
        return self.vectors[t % self.period]

    def to_dict(self) -> dict:
        return {"period": self.period, "vectors": [v.tolist() for v in self.vectors], "p_star": self.p_star}


def _left_fixed(m: np.ndarray, start: np.ndarray) -> np.ndarray:
    lazy_t = ((m + np.eye(m.shape[0])) / 2).T  # same fixed vectors, no periodic oscillation
    x = start / start.sum()
    for _ in range(APS_MAX_ITER):
        nxt = lazy_t @ x
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - x)) < APS_TOL:
            return nxt
        x = nxt
    raise ApsError("power iteration did not converge")


def solve_aps_periodic(expected_chain: Sequence[np.ndarray]) -> ApsSequence:
    """Periodic APS of ``E[A(0)], ..., E[A(p-1)]`` via left fixed vectors of cyclic products."""
    mats = [np.asarray(m, dtype=float) for m in expected_chain]
    p = len(mats)
    if p < 1:
        raise ValueError("period must be at least 1")
    n = mats[0].shape[0]
    vectors = []
    for k in range(p):
        cyc = np.eye(n)
        for r in range(p):
            cyc = mats[(k + r) % p] @ cyc  # A(k+p-1) ... A(k)
        first = _left_fixed(cyc, np.ones(n))
        second = _left_fixed(cyc, np.arange(1.0, n + 1) ** 2)
        if np.max(np.abs(first - second)) > APS_AGREE_TOL:
            raise ApsError(f"phase {k}: left fixed vector is not unique")
        vectors.append(first)
    aps = ApsSequence(p, tuple(vectors), float(min(v.min() for v in vectors)))
    ok, resid = verify_aps(aps, mats, APS_VERIFY_TOL)
    if not ok:
        raise ApsError(f"solved sequence fails the defining relation (residual {resid:.3g})")
    return aps


def verify_aps(aps: ApsSequence, expected_chain: Sequence[np.ndarray], tol: float = APS_VERIFY_TOL):
    """Return ``(ok, max_residual)`` for ``pi(k+1)^T E[A(k)] = pi(k)^T`` over one period of the chain."""
    p = len(expected_chain)
    resid = 0.0
    for k in range(max(p, aps.period)):
        lhs = aps.at(k + 1) @ np.asarray(expected_chain[k % p])
        resid = max(resid, float(np.max(np.abs(lhs - aps.at(k)))))
    return resid <= tol, resid


def diff_span(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty vector")
    return float(x.max() - x.min())


def comparison_function(x, pi) -> float:
    x = np.asarray(x, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if x.shape != pi.shape:
        raise ValueError("x and pi must have the same length")
    return float(pi @ (x - pi @ x) ** 2)
