import numpy as np

from nbsl import make_world

A_E = np.array([[1.0, 0.0], [0.5, 0.5]])
A_O = np.array([[0.5, 0.5], [0.0, 1.0]])
W_0 = np.array([[-0.5, 0.5], [0.0, 0.0]])


def random_stochastic(rng, n, zero_frac=0.0):
    m = rng.random((n, n)) * (rng.random((n, n)) >= zero_frac)
    m[np.arange(n), np.arange(n)] += 0.05
    return m / m.sum(axis=1, keepdims=True)


def random_world(rng, n, k, signals=2, equal_pairs=0):
    """Random positive likelihood tables; optionally copy the true row into a few states."""
    liks = []
    for _ in range(n):
        tab = rng.random((k, signals)) + 0.1
        tab /= tab.sum(axis=1, keepdims=True)
        for s in range(1, 1 + equal_pairs):
            if s < k and rng.random() < 0.5:
                tab[s] = tab[0]
        liks.append(tab)
    return make_world([f"s{q}" for q in range(k)], 0, liks)


def world_needing_everyone(n):
    """Agent i alone separates state i+1 from the truth, so only the full set is self-sufficient."""
    liks = []
    for i in range(n):
        tab = np.tile([0.5, 0.5], (n + 1, 1))
        tab[i + 1] = [0.25, 0.75]
        liks.append(tab)
    return make_world([f"t{k}" for k in range(n + 1)], 0, liks)


def random_usc_block(rng, n, B, delta, extra=0.15):
    """B matrices whose union graph contains a random Hamiltonian cycle.

    Positive entries are at least ``delta`` and every diagonal entry is positive.
    """
    perm = rng.permutation(n)
    pos = np.zeros((B, n, n), dtype=bool)
    if n > 1:
        for k in range(n):
            src, dst = perm[k], perm[(k + 1) % n]
            pos[rng.integers(B), dst, src] = True
    pos |= rng.random((B, n, n)) < extra
    mats = []
    for b in range(B):
        p = pos[b].copy()
        np.fill_diagonal(p, True)
        m = np.zeros((n, n))
        for i in range(n):
            idx = np.flatnonzero(p[i])
            m[i, idx] = delta + (1 - delta * len(idx)) * rng.dirichlet(np.ones(len(idx)))
        mats.append(m)
    return mats


def random_usc_chain(rng, n, B, delta, blocks):
    return [m for _ in range(blocks) for m in random_usc_block(rng, n, B, delta)]
