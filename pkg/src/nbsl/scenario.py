"""YAML scenario files: parsing with field-addressed diagnostics, and serialization.

Numeric fields accept rational literals such as ``"1/3"``; they are parsed
exactly with :class:`fractions.Fraction` and converted to floats once.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .chains import ChainSpecError, chain_from_dict
from .connectivity import ApsError, solve_aps_periodic
from .harness import RecordOptions, Scenario, ScenarioError
from .world import WorldModel, WorldModelError

PARSE_ROW_TOL = 1e-9


def _num(value, where: str) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ScenarioError(f"{where}: expected a number or rational literal, got {value!r}")


def _numeric_tree(value, where: str):
    """Convert every leaf of a nested list to float."""
    if isinstance(value, list):
        return [_numeric_tree(v, f"{where}[{k}]") for k, v in enumerate(value)]
    return _num(value, where)


def _chain_tree(d: dict, where: str) -> dict:
    out = {}
    for key, value in d.items():
        path = f"{where}.{key}"
        if key == "kind" or value is None:
            out[key] = value
        elif key == "inner":
            if not isinstance(value, dict):
                raise ScenarioError(f"{path}: expected a mapping")
            out[key] = _chain_tree(value, path)
        elif key == "size":
            out[key] = int(_num(value, path))
        else:
            out[key] = _numeric_tree(value, path)
    return out


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    if key not in d:
        raise ScenarioError(f"{where}: missing field {key!r}")
    return d[key]


def _parse_world(d: dict) -> WorldModel:
    states = [str(s) for s in _require(d, "states", "world")]
    true_state = str(_require(d, "true_state", "world"))
    if true_state not in states:
        raise ScenarioError(f"world.true_state: {true_state!r} is not one of {states}")
    agents = _require(d, "agents", "world")
    if not isinstance(agents, list) or not agents:
        raise ScenarioError("world.agents: expected a nonempty list")
    signals, liks = [], []
    for i, ag in enumerate(agents):
        where = f"world.agents[{i}]"
        sig = [str(s) for s in _require(ag, "signals", where)]
        table = _require(ag, "likelihoods", where)
        if not isinstance(table, dict) or set(map(str, table)) != set(states):
            raise ScenarioError(f"{where}.likelihoods: need one row per state {states}")
        rows = []
        for st in states:
            row = np.array(_numeric_tree(table[st], f"{where}.likelihoods.{st}"), dtype=float)
            if row.shape != (len(sig),):
                raise ScenarioError(f"{where}.likelihoods.{st}: expected {len(sig)} entries")
            if abs(row.sum() - 1) > PARSE_ROW_TOL:
                raise ScenarioError(
                    f"{where}.likelihoods.{st}: row for agent {i}, state {st!r} sums to {row.sum():.12g}, not 1"
                )
            rows.append(row / row.sum())
        signals.append(sig)
        liks.append(np.array(rows))
    joint = d.get("joint")
    if joint is not None:
        joint = np.array(_numeric_tree(joint, "world.joint"), dtype=float)
    try:
        return WorldModel(tuple(states), states.index(true_state), tuple(map(tuple, signals)), tuple(liks), joint)
    except WorldModelError as exc:
        raise ScenarioError(f"world: {exc}") from None


def _parse_priors(value, world: WorldModel) -> np.ndarray:
    n, k = world.n_agents, world.n_states
    if value is None or value == "uniform":
        return np.full((n, k), 1.0 / k)
    if isinstance(value, dict):
        preset = value.get("preset", "custom" if "custom" in value else None)
        if preset == "uniform":
            return np.full((n, k), 1.0 / k)
        if preset == "degenerate":
            state = str(_require(value, "state", "priors"))
            if state not in world.states:
                raise ScenarioError(f"priors.state: unknown state {state!r}")
            out = np.zeros((n, k))
            out[:, world.states.index(state)] = 1.0
            return out
        if preset == "custom":
            m = np.array(_numeric_tree(_require(value, "custom", "priors"), "priors.custom"), dtype=float)
            if m.shape != (n, k):
                raise ScenarioError(f"priors.custom: expected shape {(n, k)}, got {m.shape}")
            bad = np.flatnonzero(np.abs(m.sum(axis=1) - 1) > PARSE_ROW_TOL)
            if bad.size or np.any(m < 0):
                raise ScenarioError(f"priors.custom: rows {bad.tolist()} are not probability vectors")
            return m / m.sum(axis=1, keepdims=True)
    raise ScenarioError(f"priors: expected 'uniform', a degenerate preset or a custom matrix, got {value!r}")


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: top level must be a mapping")
    world = _parse_world(_require(doc, "world", "scenario"))
    try:
        chain = chain_from_dict(_chain_tree(_require(doc, "chain", "scenario"), "chain"))
    except ChainSpecError as exc:
        raise ScenarioError(f"chain: {exc}") from None
    priors = _parse_priors(doc.get("priors"), world)

    rule = doc.get("rule", "standard")
    inertia, allow_high = None, False
    if isinstance(rule, dict):
        body = rule
        rule = str(_require(body, "name", "rule"))
        if rule == "inertial":
            inertia = _numeric_tree(_require(body, "lambda", "rule"), "rule.lambda")
            inertia = np.atleast_1d(np.array(inertia, dtype=float))
            if inertia.ndim == 1:
                inertia = inertia[None, :] if inertia.shape[0] == world.n_agents else inertia[:, None]
            inertia = tuple(np.broadcast_to(r, (world.n_agents,)) for r in inertia)
            allow_high = bool(body.get("allow_high_inertia", False))

    rec = doc.get("record") or {}
    record = RecordOptions(
        snapshot_every=rec.get("snapshot_every"),
        matrices=bool(rec.get("matrices", False)),
        signals=bool(rec.get("signals", False)),
        monitors=bool(rec.get("monitors", True)),
        epoch_gamma=None if rec.get("epoch_gamma") is None else _num(rec["epoch_gamma"], "record.epoch_gamma"),
        epoch_length=rec.get("epoch_length"),
    )

    analysis = dict(doc.get("analysis") or {})
    for key in ("gamma", "delta"):
        if key in analysis:
            analysis[key] = _num(analysis[key], f"analysis.{key}")
    aps = None
    if analysis.get("aps_period"):
        p = int(analysis["aps_period"])
        try:
            aps = solve_aps_periodic([chain.expected_at(t) for t in range(p)])
        except ApsError as exc:
            raise ScenarioError(f"analysis.aps_period: {exc}") from None

    horizon = doc.get("horizon", 1000)
    if not isinstance(horizon, int) or horizon < 1:
        raise ScenarioError(f"horizon: expected a positive integer, got {horizon!r}")
    return Scenario(
        world=world,
        chain=chain,
        priors=priors,
        rule=rule,
        horizon=horizon,
        inertia=inertia,
        record=record,
        aps=aps,
        analysis=analysis,
        allow_high_inertia=allow_high,
        name=str(doc.get("name", "scenario")),
    )


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"{loc}: syntax error: {problem}") from None
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def parse_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario_text(path.read_text(), str(path))


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    w = s.world
    world = {
        "states": list(w.states),
        "true_state": w.states[w.true_state],
        "agents": [
            {"signals": list(sig), "likelihoods": {st: lik[k].tolist() for k, st in enumerate(w.states)}}
            for sig, lik in zip(w.signals, w.likelihoods)
        ],
    }
    if w.joint is not None:
        world["joint"] = w.joint.tolist()
    if s.rule == "inertial":
        rule: Any = {
            "name": "inertial",
            "lambda": [l.tolist() for l in s.inertia],
            "allow_high_inertia": s.allow_high_inertia,
        }
    else:
        rule = s.rule
    rec = {k: v for k, v in s.record.to_dict().items() if v is not None}
    return {
        "name": s.name,
        "world": world,
        "chain": s.chain.to_dict(),
        "priors": {"preset": "custom", "custom": s.priors.tolist()},
        "rule": rule,
        "horizon": s.horizon,
        "record": rec,
        "analysis": dict(s.analysis),
    }


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)
