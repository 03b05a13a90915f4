"""Run the statistical experiments and write one result bundle per scenario.

Usage: python3 scripts/run_acceptance_experiments.py [--out results] [--workers 4]
"""

import argparse
import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from nbsl import load_fixture, run_monte_carlo, write_results
from nbsl.results import bundle_from_traces

EXPERIMENTS = [
    # name, fixture, overrides, seeds, epsilon
    ("usc_consensus", "usc_consensus_4", {"horizon": 20000}, 20, 0.01),
    ("link_failure", "link_failure_k5", {"horizon": 5001}, 50, 0.01),
    ("link_failure_inertial", "link_failure_k5", {"horizon": 5000, "rule": "inertial", "inertia": (np.full(5, 0.5),)}, 50, 0.01),
    ("six_agent", "six_agent_aperiodic", {"horizon": 2**14}, 30, 0.05),
    ("link_failure_short", "link_failure_k5", {"horizon": 1001}, 200, 0.01),
]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="results")
    p.add_argument("--workers", type=int)
    p.add_argument("--only", nargs="*")
    args = p.parse_args()
    overview = {}
    for name, fixture, overrides, seeds, eps in EXPERIMENTS:
        if args.only and name not in args.only:
            continue
        sc = replace(load_fixture(fixture), name=name, **overrides)
        res = run_monte_carlo(sc, range(seeds), eps, args.workers, keep_traces=True)
        write_results(bundle_from_traces(res.summary, res.traces), Path(args.out) / name)
        s = res.summary
        overview[name] = {k: s[k] for k in ("n_seeds", "learned_fraction", "median_learning_time",
                                            "mean_final_min_true_belief", "max_final_span", "violations")}
        print(name, json.dumps(overview[name], default=float))
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "overview.json").write_text(json.dumps(overview, indent=2, default=float) + "\n")


if __name__ == "__main__":
    main()
