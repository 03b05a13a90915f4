"""Seeded trials, Monte Carlo aggregation and trace metrics."""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .chains import ChainSpec, backward_product
from .connectivity import ApsSequence, EpochCertificate, detect_gamma_epoch, diff_span
from .dynamics import diffusion_update, inertial_update, renormalize, standard_update
from .world import WorldModel, min_likelihood, sample_signal

RULES = ("standard", "inertial", "diffusion")
DENSE_SNAPSHOT_LIMIT = 256
SPARSE_SNAPSHOT_EVERY = 10
STOCHASTIC_TOL = 1e-9
MONITOR_TOL = 1e-9


class ScenarioError(ValueError):
    """Raised for an inconsistent scenario."""


@dataclass(frozen=True)
class RecordOptions:
    snapshot_every: int | None = None  # None picks the default cadence
    matrices: bool = False
    signals: bool = False
    monitors: bool = True
    epoch_gamma: float | None = None
    epoch_length: int | None = None

    def to_dict(self) -> dict:
        return {
            "snapshot_every": self.snapshot_every,
            "matrices": self.matrices,
            "signals": self.signals,
            "monitors": self.monitors,
            "epoch_gamma": self.epoch_gamma,
            "epoch_length": self.epoch_length,
        }


@dataclass(frozen=True)
class Scenario:
    world: WorldModel
    chain: ChainSpec
    priors: np.ndarray
    rule: str = "standard"
    horizon: int = 1000
    inertia: tuple[np.ndarray, ...] | None = None
    record: RecordOptions = field(default_factory=RecordOptions)
    aps: ApsSequence | None = None
    analysis: dict[str, Any] = field(default_factory=dict)
    allow_high_inertia: bool = False
    name: str = "scenario"

    def __post_init__(self):
        n, k = self.world.n_agents, self.world.n_states
        priors = np.array(self.priors, dtype=float)
        if priors.shape != (n, k):
            raise ScenarioError(f"priors have shape {priors.shape}, expected {(n, k)}")
        if np.any(priors < 0) or np.any(np.abs(priors.sum(axis=1) - 1) > 1e-9):
            raise ScenarioError("priors must be stochastic rows")
        priors.setflags(write=False)
        object.__setattr__(self, "priors", priors)
        if self.chain.n != n:
            raise ScenarioError(f"chain has {self.chain.n} agents, world has {n}")
        if self.rule not in RULES:
            raise ScenarioError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least 1")
        if self.rule == "inertial":
            if not self.inertia:
                raise ScenarioError("inertial rule needs a lambda schedule")
            lam = tuple(np.broadcast_to(np.asarray(l, dtype=float), (n,)).copy() for l in self.inertia)
            if any(np.any(l < 0) or np.any(l > 1) for l in lam):
                raise ScenarioError("lambda values must lie in [0, 1]")
            if max(float(l.max()) for l in lam) >= 1 and not self.allow_high_inertia:
                raise ScenarioError("lambda_max must be below 1 (set allow_high_inertia to override)")
            object.__setattr__(self, "inertia", lam)
        if self.aps is not None and self.aps.vectors[0].shape[0] != n:
            raise ScenarioError("APS dimension does not match the number of agents")

    @property
    def snapshot_every(self) -> int:
        if self.record.snapshot_every:
            return self.record.snapshot_every
        dense = self.world.n_agents * self.world.n_states <= DENSE_SNAPSHOT_LIMIT
        return 1 if dense else SPARSE_SNAPSHOT_EVERY

    @property
    def lambda_max(self) -> float | None:
        return None if self.inertia is None else max(float(l.max()) for l in self.inertia)


def substream(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (seed, purpose) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(purpose.encode())]))


@dataclass
class TrialTrace:
    seed: int
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    series: dict[str, tuple[np.ndarray, np.ndarray]]
    initial_connectivity: int | None
    violations: dict[str, int]
    max_drift: float
    true_state: int
    matrices: list[np.ndarray] | None = None
    signals: np.ndarray | None = None
    epochs: list[EpochCertificate] | None = None

    @property
    def final_beliefs(self) -> np.ndarray:
        return self.snapshots[-1]


def _true_signal_law(world: WorldModel) -> np.ndarray:
    """``[i, s]`` probability of signal ``s`` under the true state; zero on padding."""
    out = np.zeros(world._padded.shape[:2])
    for i, l in enumerate(world.likelihoods):
        out[i, : l.shape[1]] = l[world.true_state]
    return out


class _ChunkMonitor:
    """Buffers steps and evaluates the per-step checks in vectorized batches.

    Checks: row-stochasticity, the one-step influence bound
    ``mu_j(t+1) >= a_ji l0 mu_i(t)`` and the likelihood-ratio expectation
    bounds.  Also records ``max |mu_{t+1}(true) - A mu_t(true)|``.
    """

    def __init__(self, world: WorldModel, checks: bool, budget: int = 1 << 18):
        n, k = world.n_agents, world.n_states
        self.world, self.checks = world, checks
        self.size = max(1, min(512, budget // (n * n * k)))
        self.a = np.empty((self.size, n, n))
        self.mu = np.empty((self.size, n, k))
        self.new = np.empty((self.size, n, k))
        self.fill = 0
        self.l0 = min_likelihood(world)
        self.k0 = 1.0 / self.l0 - 1.0
        self.p_true = _true_signal_law(world)
        self.not_eq = np.ones((n, k), dtype=bool)
        for i, eq in enumerate(world.equivalence.theta_star_i):
            self.not_eq[i, list(eq)] = False
        self.residuals: list[np.ndarray] = []
        self.violations = {"stochastic": 0, "influence": 0, "k0": 0}

    def push(self, a, mu, new):
        c = self.fill
        self.a[c], self.mu[c], self.new[c] = a, mu, new
        self.fill += 1
        if self.fill == self.size:
            self.flush()

    def flush(self):
        L = self.fill
        if L == 0:
            return
        self.fill = 0
        a, mu, new = self.a[:L], self.mu[:L], self.new[:L]
        ts = self.world.true_state
        pred = np.einsum("tij,tj->ti", a, mu[:, :, ts])
        self.residuals.append(np.abs(new[:, :, ts] - pred).max(axis=1))
        if not self.checks:
            return
        v = self.violations
        bad = (a.min(axis=(1, 2)) < 0) | (np.abs(a.sum(axis=2) - 1).max(axis=1) > STOCHASTIC_TOL)
        v["stochastic"] += int(bad.sum())
        bound = a[:, :, :, None] * (self.l0 * mu)[:, None, :, :]
        v["influence"] += int((new[:, :, None, :] < bound - MONITOR_TOL).any(axis=(1, 2, 3)).sum())
        lik = self.world._padded
        m = np.einsum("isk,tik->tis", lik, mu)
        g = np.einsum("is,tisk->tik", self.p_true, lik[None] / m[..., None]) - self.p_true.sum(axis=1)[:, None]
        low = np.where(self.not_eq, np.inf, g).min(axis=(1, 2))
        v["k0"] += int(((g.max(axis=(1, 2)) > self.k0 + MONITOR_TOL) | (low < -MONITOR_TOL)).sum())


def run_trial(scenario: Scenario, seed: int) -> TrialTrace:
    """Simulate one seeded trajectory and collect its diagnostic series."""
    world, chain = scenario.world, scenario.chain
    n = world.n_agents
    ts = world.true_state
    horizon = scenario.horizon
    every = scenario.snapshot_every
    rec = scenario.record
    need_matrices = rec.matrices or rec.epoch_gamma is not None
    mrng = substream(seed, "matrices")
    srng = substream(seed, "signals")

    monitor = _ChunkMonitor(world, rec.monitors)
    mu = scenario.priors.copy()
    snap_times = [0]
    snaps = [mu.copy()]
    min_true = np.empty(horizon + 1)
    min_true[0] = mu[:, ts].min()
    max_drift = 0.0
    conn_col = np.eye(n)[:, 0]
    conn_time = None
    mats: list[np.ndarray] = []
    sigs = []

    for t in range(horizon):
        a = chain.matrix_at(t, mrng)
        if need_matrices:
            mats.append(np.array(a))
        omega = sample_signal(world, srng)
        if rec.signals:
            sigs.append(omega)
        if scenario.rule == "standard":
            new = standard_update(world, mu, a, omega)
        elif scenario.rule == "inertial":
            new = inertial_update(world, mu, a, scenario.inertia[t % len(scenario.inertia)], omega)
        else:
            new = diffusion_update(world, mu, a, omega)
        new, drift = renormalize(new)
        max_drift = max(max_drift, drift)
        if conn_time is None:
            conn_col = a @ conn_col
            if conn_col.min() > 0:
                conn_time = t + 1
        monitor.push(a, mu, new)
        mu = new
        min_true[t + 1] = mu[:, ts].min()
        if (t + 1) % every == 0 or t + 1 == horizon:
            snap_times.append(t + 1)
            snaps.append(mu.copy())
    monitor.flush()
    resid = np.concatenate(monitor.residuals)
    violations = monitor.violations

    snap_times = np.array(snap_times)
    snaps = np.array(snaps)
    series = {
        "min_true_belief": (np.arange(horizon + 1), min_true),
        "residual_inf": (np.arange(horizon), resid),
    }
    for k, label in enumerate(world.states):
        series[f"span:{label}"] = (snap_times, snaps[:, :, k].max(axis=1) - snaps[:, :, k].min(axis=1))
    lik = world._padded
    pred = np.einsum("isk,tik->tis", lik, snaps)
    series["forecast_err"] = (snap_times, np.abs(pred - lik[None, :, :, ts]).max(axis=(1, 2)))
    if scenario.aps is not None:
        pis = np.array([scenario.aps.at(int(t)) for t in snap_times])
        for k, label in enumerate(world.states):
            series[f"pi_mu:{label}"] = (snap_times, np.einsum("ti,ti->t", pis, snaps[:, :, k]))
        with np.errstate(divide="ignore"):
            logs = np.log(snaps[:, :, ts])
        weighted = np.where(pis > 0, pis * logs, 0.0)
        series["pi_log_mu_true"] = (snap_times, weighted.sum(axis=1))

    epochs = None
    if rec.epoch_gamma is not None:
        length = rec.epoch_length or 1
        epochs = []
        for t_s in range(0, horizon - length, length):
            cert = detect_gamma_epoch(mats[t_s : t_s + length + 1], world, rec.epoch_gamma, t_s)
            if cert is not None:
                epochs.append(cert)

    return TrialTrace(
        seed=int(seed),
        snapshot_times=snap_times,
        snapshots=snaps,
        series=series,
        initial_connectivity=conn_time,
        violations=violations,
        max_drift=max_drift,
        true_state=ts,
        matrices=mats if rec.matrices else None,
        signals=np.array(sigs) if rec.signals else None,
        epochs=epochs,
    )


def learning_time(trace: TrialTrace, epsilon: float) -> int | None:
    """First time every agent's belief in the true state reaches ``1 - epsilon``."""
    times, values = trace.series["min_true_belief"]
    hit = np.flatnonzero(values >= 1 - epsilon)
    return int(times[hit[0]]) if hit.size else None


def disagreement_series(trace: TrialTrace, theta: int) -> tuple[np.ndarray, np.ndarray]:
    col = trace.snapshots[:, :, theta]
    return trace.snapshot_times, np.array([diff_span(c) for c in col])


def initial_connectivity_time(trace: TrialTrace) -> int | None:
    """First ``T`` with ``(A(T:0))_{i0} > 0`` for every agent ``i``."""
    if trace.matrices is None:
        raise ValueError("initial connectivity needs the matrix log; record matrices in the scenario")
    for T in range(1, len(trace.matrices) + 1):
        if np.all(backward_product(trace.matrices, 0, T)[:, 0] > 0):
            return T
    return None


def trial_record(trace: TrialTrace, epsilon: float) -> dict[str, Any]:
    final = trace.final_beliefs
    spans = final.max(axis=0) - final.min(axis=0)
    return {
        "seed": trace.seed,
        "learning_time": learning_time(trace, epsilon),
        "final_min_true_belief": float(final[:, trace.true_state].min()),
        "final_max_span": float(spans.max()),
        "final_residual_inf": float(trace.series["residual_inf"][1][-1]),
        "initial_connectivity": trace.initial_connectivity,
        "violations": dict(trace.violations),
        "max_drift": trace.max_drift,
    }


def summarize(records: Sequence[dict[str, Any]], epsilon: float) -> dict[str, Any]:
    """Order-independent aggregate of per-seed records."""
    if not records:
        raise ValueError("no records to summarize")
    recs = sorted(records, key=lambda r: r["seed"])
    times = [r["learning_time"] for r in recs if r["learning_time"] is not None]
    violations: dict[str, int] = {}
    for r in recs:
        for key, v in r["violations"].items():
            violations[key] = violations.get(key, 0) + v
    return {
        "n_seeds": len(recs),
        "epsilon": epsilon,
        "learned_fraction": len(times) / len(recs),
        "median_learning_time": float(np.median(times)) if times else None,
        "mean_final_min_true_belief": float(np.mean([r["final_min_true_belief"] for r in recs])),
        "max_final_span": float(max(r["final_max_span"] for r in recs)),
        "median_final_residual_inf": float(np.median([r["final_residual_inf"] for r in recs])),
        "violations": dict(sorted(violations.items())),
        "max_drift": float(max(r["max_drift"] for r in recs)),
        "per_seed": recs,
    }


@dataclass
class MonteCarloResult:
    summary: dict[str, Any]
    traces: list[TrialTrace] | None = None


def _trial_job(args):
    scenario, seed, epsilon, keep = args
    trace = run_trial(scenario, seed)
    return trial_record(trace, epsilon), (trace if keep else None)


def run_monte_carlo(
    scenario: Scenario,
    seeds: Sequence[int],
    epsilon: float = 0.01,
    workers: int | None = None,
    keep_traces: bool = False,
) -> MonteCarloResult:
    """Run one trial per seed, optionally across processes, and aggregate."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds must be nonempty")
    jobs = [(scenario, s, epsilon, keep_traces) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_trial_job, jobs))
    else:
        out = [_trial_job(j) for j in jobs]
    records = [r for r, _ in out]
    traces = [tr for _, tr in out] if keep_traces else None
    return MonteCarloResult(summarize(records, epsilon), traces)
