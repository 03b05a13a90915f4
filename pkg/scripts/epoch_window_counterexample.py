"""Uniformly strongly connected chains whose length-B windows are not gamma-epochs.

For each random chain the script reports whether every window [kB, (k+1)B]
certifies at gamma = delta^(B(B+1)), and whether the longer windows of
(n-1)B steps certify at gamma = delta^((n-1)B). The world is one where every
agent is needed to separate the states, so only the full agent set is
self-sufficient.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from helpers import random_usc_chain, world_needing_everyone  # noqa: E402

from nbsl import check_usc, detect_gamma_epoch  # noqa: E402


def first_bad_window(chain, world, length, step, gamma):
    for t_s in range(0, len(chain) - length, step):
        if detect_gamma_epoch(chain[t_s : t_s + length + 1], world, gamma, t_s) is None:
            return t_s
    return None


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--chains", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    args = p.parse_args()

    cyc = np.array([[0.5, 0, 0.5], [0.5, 0.5, 0], [0, 0.5, 0.5]])
    world = world_needing_everyone(3)
    print("3-cycle with self-loops, B=1, delta=1/2")
    print("  USC holds:", check_usc([cyc] * 4, 1, 0.5).holds)
    print("  window of B steps certified:", detect_gamma_epoch([cyc, cyc], world, 0.25) is not None)
    print("  window of 2B steps certified:", detect_gamma_epoch([cyc] * 3, world, 0.25) is not None)

    rng = np.random.default_rng(args.seed)
    short_fail = long_fail = 0
    for _ in range(args.chains):
        n, B = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        delta = float(rng.uniform(0.05, 1 / 6))
        chain = random_usc_chain(rng, n, B, delta, blocks=n + 2)
        world = world_needing_everyone(n)
        short_fail += first_bad_window(chain, world, B, B, delta ** (B * (B + 1))) is not None
        L = (n - 1) * B
        long_fail += first_bad_window(chain, world, L, B, delta**L) is not None
    print(f"random chains failing with windows of B steps: {short_fail}/{args.chains}")
    print(f"random chains failing with windows of (n-1)B steps: {long_fail}/{args.chains}")


if __name__ == "__main__":
    main()
