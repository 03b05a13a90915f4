"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 a certificate or check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .chains import ChainSpecError
from .connectivity import (
    ApsError,
    check_usc,
    detect_gamma_epoch,
    diff_span,
    max_balance_alpha,
    solve_aps_periodic,
    strong_feedback_floor,
)
from .dynamics import influence_lower_bound, k0_violation
from .fixtures import fixture_names, fixture_text, load_fixture
from .harness import ScenarioError, run_monte_carlo, run_trial, substream
from .results import bundle_from_traces, write_results
from .scenario import parse_scenario
from .world import WorldModelError

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(ref: str):
    if Path(ref).exists():
        return parse_scenario(ref)
    if ref in fixture_names():
        return load_fixture(ref)
    raise CliError(f"no scenario file or fixture named {ref!r}", EXIT_INVALID)


def _seed_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise CliError(f"--seeds expects a..b, got {text!r}", EXIT_INVALID) from None
    if b < a or a < 0:
        raise CliError(f"--seeds range {text!r} is empty or negative", EXIT_INVALID)
    return list(range(a, b + 1))


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    if args.horizon:
        scenario = replace(scenario, horizon=args.horizon)
    result = run_monte_carlo(scenario, _seed_range(args.seeds), args.epsilon, args.workers, keep_traces=True)
    bundle = bundle_from_traces(result.summary, result.traces)
    bundle.summary["scenario"] = scenario.name
    for path in write_results(bundle, args.out):
        print(path)
    return EXIT_FAILED if any(result.summary["violations"].values()) else EXIT_OK


def cmd_check(args) -> int:
    scenario = _load(args.scenario)
    t0, t1 = args.window
    if not 0 <= t0 < t1:
        raise CliError("--window needs 0 <= t0 < t1", EXIT_INVALID)
    rng = substream(args.seed, "matrices")
    mats = [np.array(scenario.chain.matrix_at(t, rng)) for t in range(t1 + 1)]
    window = mats[t0 : t1 + 1]
    report: dict = {"scenario": scenario.name, "window": [t0, t1], "seed": args.seed}
    ok = True
    gamma = args.gamma if args.gamma is not None else scenario.analysis.get("gamma")
    if gamma is not None:
        cert = detect_gamma_epoch(window, scenario.world, gamma, t0)
        report["gamma_epoch"] = {"gamma": gamma, "certified": cert is not None}
        if cert is not None:
            report["gamma_epoch"]["certificate"] = cert.to_dict()
        ok &= cert is not None
    if args.usc:
        B, delta = int(args.usc[0]), float(args.usc[1])
        span = window[:-1]
        if len(span) % B:
            raise CliError(f"window length {len(span)} is not a multiple of B={B}", EXIT_INVALID)
        verdict = check_usc(span, B, delta)
        report["usc"] = verdict.to_dict()
        ok &= verdict.holds
    if args.balance:
        alphas = [max_balance_alpha(m) for m in window]
        alpha = min(alphas)
        report["balance"] = {"alpha": alpha, "balanced": alpha > 0, "note": "minimum over the window matrices"}
        ok &= alpha > 0
    if args.feedback:
        floor = strong_feedback_floor(window)
        report["strong_feedback"] = {"floor": floor, "holds": floor > 0}
        ok &= floor > 0
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_aps(args) -> int:
    scenario = _load(args.scenario)
    expected = [scenario.chain.expected_at(t) for t in range(args.period)]
    try:
        aps = solve_aps_periodic(expected)
    except ApsError as exc:
        print(f"aps: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for k, v in enumerate(aps.vectors):
        print(f"pi({k}) = " + " ".join(f"{x:.12g}" for x in v))
    print(f"p_star = {aps.p_star:.12g}")
    return EXIT_OK if aps.p_star > 0 else EXIT_FAILED


def cmd_verify_lemmas(args) -> int:
    scenario = _load(args.scenario)
    rec = replace(scenario.record, matrices=True, monitors=True, snapshot_every=1)
    if args.horizon:
        scenario = replace(scenario, horizon=args.horizon)
    scenario = replace(scenario, record=rec)
    trace = run_trial(scenario, args.seed)
    world, mats, snaps = scenario.world, trace.matrices, trace.snapshots
    n, horizon = world.n_agents, scenario.horizon
    B = int(scenario.analysis.get("B", 1))
    rng = substream(args.seed, "lemma-sampling")
    counts = dict(trace.violations)
    counts["influence_sampled"] = 0
    counts["k0_sampled"] = 0
    counts["span_monotone"] = 0
    for _ in range(args.samples):
        d = int(rng.integers(1, min(B, horizon) + 1))
        t = int(rng.integers(0, horizon - d + 1))
        i, j = (int(x) for x in rng.integers(0, n, 2))
        if not influence_lower_bound(mats, world, i, j, t, d, B, snaps).holds:
            counts["influence_sampled"] += 1
        agent, theta = int(rng.integers(n)), int(rng.integers(world.n_states))
        if k0_violation(world, agent, snaps[int(rng.integers(len(snaps)))][agent], theta):
            counts["k0_sampled"] += 1
        t1 = int(rng.integers(0, horizon))
        t2 = int(rng.integers(t1, min(horizon, t1 + 4 * B) + 1))
        x = rng.random(n)
        y = x
        for s in range(t1, t2):
            y = mats[s] @ y
        if diff_span(y) > diff_span(x) + 1e-12:
            counts["span_monotone"] += 1
    _emit({"scenario": scenario.name, "seed": args.seed, "samples": args.samples, "violations": counts})
    return EXIT_FAILED if any(counts.values()) else EXIT_OK


def cmd_fixtures(args) -> int:
    if args.action == "list":
        for name in fixture_names():
            print(name)
        return EXIT_OK
    if not args.name:
        raise CliError("fixtures dump needs a fixture name", EXIT_INVALID)
    try:
        sys.stdout.write(fixture_text(args.name))
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_INVALID) from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbsl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run seeded trials and write a result bundle")
    s.add_argument("scenario", help="scenario file or fixture name")
    s.add_argument("--seeds", required=True, help="inclusive seed range a..b")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--horizon", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="connectivity certificates on a realized window")
    c.add_argument("scenario")
    c.add_argument("--window", type=int, nargs=2, required=True, metavar=("T0", "T1"))
    c.add_argument("--gamma", type=float)
    c.add_argument("--usc", nargs=2, metavar=("B", "DELTA"))
    c.add_argument("--balance", action="store_true")
    c.add_argument("--feedback", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    a = sub.add_parser("aps", help="solve and verify the periodic APS of the expected chain")
    a.add_argument("scenario")
    a.add_argument("--period", type=int, required=True)
    a.set_defaults(func=cmd_aps)

    v = sub.add_parser("verify-lemmas", help="one trial with every lemma monitor")
    v.add_argument("scenario")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--horizon", type=int)
    v.set_defaults(func=cmd_verify_lemmas)

    f = sub.add_parser("fixtures", help="list or print shipped fixtures")
    f.add_argument("action", choices=["list", "dump"])
    f.add_argument("name", nargs="?")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ScenarioError, WorldModelError, ChainSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
