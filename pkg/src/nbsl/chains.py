"""Row-stochastic matrices, backward products and chain generators.

Every chain kind exposes ``matrix_at(t, rng)`` for the realized matrix and
``expected_at(t)`` for the expected matrix ``E[A(t)]``.  Random kinds draw
from ``rng`` in call order, so a simulation must request ``t = 0, 1, 2, ...``
sequentially from a stream it owns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar, Sequence

import numpy as np
from scipy.stats import binom

STOCHASTIC_TOL = 1e-9


class ChainSpecError(ValueError):
    """Raised for an invalid chain description."""


@dataclass(frozen=True)
class StochasticReport:
    ok: bool
    bad_rows: tuple[tuple[int, float], ...] = ()
    negative_entries: tuple[tuple[int, int, float], ...] = ()

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        parts = [f"row {i} sums to {s:.12g}" for i, s in self.bad_rows]
        parts += [f"entry ({i}, {j}) = {v:.12g} < 0" for i, j, v in self.negative_entries]
        return "; ".join(parts)


def validate_stochastic(m, tol: float = STOCHASTIC_TOL) -> StochasticReport:
    """Check non-negativity and unit row sums; report what is off."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    sums = m.sum(axis=1)
    bad_rows = tuple((int(i), float(sums[i])) for i in np.flatnonzero(np.abs(sums - 1.0) > tol))
    neg = tuple((int(i), int(j), float(m[i, j])) for i, j in zip(*np.nonzero(m < 0)))
    return StochasticReport(not bad_rows and not neg, bad_rows, neg)


def as_stochastic(m, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    """Return ``m`` as a read-only float array, raising if it is not stochastic."""
    arr = np.array(m, dtype=float)
    report = validate_stochastic(arr, tol)
    if not report:
        raise ChainSpecError(f"not a stochastic matrix: {report.describe()}")
    arr.setflags(write=False)
    return arr


def backward_product(chain: Sequence[np.ndarray], t1: int, t2: int) -> np.ndarray:
    """``A(t2:t1) = A(t2-1) A(t2-2) ... A(t1)``, with ``A(t1:t1) = I``.

    ``chain[t]`` must hold ``A(t)`` for ``t1 <= t < t2``.
    """
    if t1 > t2:
        raise ValueError(f"backward product needs t1 <= t2, got {t1} > {t2}")
    n = np.asarray(chain[t1] if t2 > t1 else chain[0]).shape[0]
    out = np.eye(n)
    for t in range(t1, t2):
        out = np.asarray(chain[t]) @ out
    return out


def link_failure_sample(base: np.ndarray, rho: float, rng) -> np.ndarray:
    """Fail every off-diagonal edge of ``base`` independently with probability ``rho``.

    The weight of a failed edge moves onto the diagonal so the row stays
    stochastic.
    """
    base = np.asarray(base, dtype=float)
    n = base.shape[0]
    failed = (rng.random((n, n)) < rho) & (base > 0)
    np.fill_diagonal(failed, False)
    out = np.where(failed, 0.0, base)
    out[np.diag_indices(n)] += np.where(failed, base, 0.0).sum(axis=1)
    return out


def erdos_renyi_sample(n: int, rho_t: float, rng) -> np.ndarray:
    """Directed G(n, rho) influence graph with uniform weights over self and in-neighbours."""
    adj = rng.random((n, n)) < rho_t
    np.fill_diagonal(adj, True)
    adj = adj.astype(float)
    return adj / adj.sum(axis=1, keepdims=True)


def inertial_augmented(a: np.ndarray, lam) -> np.ndarray:
    """2n x 2n chain whose standard dynamics reproduce inertial updating.

    Agent ``i + n`` is a copy of agent ``i``; the self-weight ``a_ii`` is split
    into a Bayesian part ``(1 - lam_i) a_ii`` on the diagonal and an inertial
    part ``lam_i a_ii`` pointing at the copy.
    """
    a = np.asarray(a, dtype=float)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (a.shape[0],))
    if np.any(lam < 0) or np.any(lam > 1):
        raise ValueError("inertia values must lie in [0, 1]")
    diag = np.diag(a)
    off = (a - np.diag(diag)) / 2
    b = np.diag((1 - lam) * diag)
    w = np.diag(lam * diag)
    return np.block([[off + b, off + w], [off + w, off + b]])


def diffusion_augmented_pair(a_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The (even, odd) pair of 2n x 2n matrices emulating diffusion-adaptation.

    The even-time matrix has zero self-weights, so the copies only mix; the
    odd-time matrix is the identity, so every agent takes a pure Bayesian step.
    """
    a_prev = np.asarray(a_prev, dtype=float)
    n = a_prev.shape[0]
    w = np.diag(np.diag(a_prev))
    half = (a_prev - w) / 2
    return np.block([[half, half + w], [half + w, half]]), np.eye(2 * n)


# ---------------------------------------------------------------------------
# chain specifications


def _matrix_list(ms, what: str) -> tuple[np.ndarray, ...]:
    out = []
    for k, m in enumerate(ms):
        try:
            out.append(as_stochastic(m))
        except (ChainSpecError, ValueError) as exc:
            raise ChainSpecError(f"{what}[{k}]: {exc}") from None
    if not out:
        raise ChainSpecError(f"{what}: at least one matrix is required")
    n = out[0].shape[0]
    if any(m.shape != (n, n) for m in out):
        raise ChainSpecError(f"{what}: matrices have inconsistent sizes")
    return tuple(out)


def _schedule(values, what: str, lo: float, hi: float, lo_open=False, hi_open=False) -> tuple[float, ...]:
    vals = tuple(float(v) for v in np.atleast_1d(values))
    if not vals:
        raise ChainSpecError(f"{what}: schedule is empty")
    for v in vals:
        if (v < lo or (lo_open and v == lo)) or (v > hi or (hi_open and v == hi)):
            lb, rb = "(" if lo_open else "[", ")" if hi_open else "]"
            raise ChainSpecError(f"{what}: value {v} outside {lb}{lo}, {hi}{rb}")
    return vals


def _lcm(a: int | None, b: int | None) -> int | None:
    if a is None or b is None:
        return None
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class ChainSpec:
    """Base class for chain descriptions."""

    kind: ClassVar[str] = ""
    random: ClassVar[bool] = False

    @property
    def n(self) -> int:
        raise NotImplementedError

    @property
    def period(self) -> int | None:
        """Period of the expected chain, or ``None`` when it is not periodic."""
        return None

    def matrix_at(self, t: int, rng=None) -> np.ndarray:
        raise NotImplementedError

    def expected_at(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def expected_window(self, t0: int, t1: int) -> list[np.ndarray]:
        return [self.expected_at(t) for t in range(t0, t1)]

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PeriodicChain(ChainSpec):
    """``A(t) = matrices[t mod p]``."""

    matrices: tuple[np.ndarray, ...]
    kind: ClassVar[str] = "periodic_deterministic"

    def __post_init__(self):
        object.__setattr__(self, "matrices", _matrix_list(self.matrices, "matrices"))

    @property
    def n(self):
        return self.matrices[0].shape[0]

    @property
    def period(self):
        return len(self.matrices)

    def matrix_at(self, t, rng=None):
        return self.matrices[t % len(self.matrices)]

    expected_at = matrix_at

    def to_dict(self):
        return {"kind": self.kind, "matrices": [m.tolist() for m in self.matrices]}


@dataclass(frozen=True)
class DyadicScheduleChain(ChainSpec):
    """Sparse-connectivity schedule keyed on powers of two.

    ``A(0) = initial``; ``A(t) = even_power`` when ``t = 4^k``; ``A(t) =
    odd_power`` when ``t = 2 * 4^k``; ``otherwise`` (identity by default) at
    every other time.
    """

    initial: np.ndarray
    even_power: np.ndarray
    odd_power: np.ndarray
    otherwise: np.ndarray | None = None
    kind: ClassVar[str] = "dyadic_schedule"

    def __post_init__(self):
        ms = [self.initial, self.even_power, self.odd_power]
        if self.otherwise is not None:
            ms.append(self.otherwise)
        ms = _matrix_list(ms, "dyadic_schedule")
        if self.otherwise is None:
            eye = np.eye(ms[0].shape[0])
            eye.setflags(write=False)
            ms = ms + (eye,)
        for name, m in zip(("initial", "even_power", "odd_power", "otherwise"), ms):
            object.__setattr__(self, name, m)

    @property
    def n(self):
        return self.initial.shape[0]

    def matrix_at(self, t, rng=None):
        if t == 0:
            return self.initial
        if t & (t - 1) == 0:
            return self.even_power if (t.bit_length() - 1) % 2 == 0 else self.odd_power
        return self.otherwise

    expected_at = matrix_at

    def to_dict(self):
        return {
            "kind": self.kind,
            "initial": self.initial.tolist(),
            "even_power": self.even_power.tolist(),
            "odd_power": self.odd_power.tolist(),
            "otherwise": self.otherwise.tolist(),
        }


@dataclass(frozen=True)
class Liu14Chain(ChainSpec):
    """``A(t) = eta(t) A + (1 - eta(t)) I`` with a periodic ``eta`` schedule."""

    base: np.ndarray
    eta: tuple[float, ...]
    kind: ClassVar[str] = "liu14"

    def __post_init__(self):
        object.__setattr__(self, "base", _matrix_list([self.base], "base")[0])
        object.__setattr__(self, "eta", _schedule(self.eta, "eta", 0.0, 1.0, lo_open=True))

    @property
    def n(self):
        return self.base.shape[0]

    @property
    def period(self):
        return len(self.eta)

    def matrix_at(self, t, rng=None):
        e = self.eta[t % len(self.eta)]
        return e * self.base + (1 - e) * np.eye(self.n)

    expected_at = matrix_at

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.tolist(), "eta": list(self.eta)}


@dataclass(frozen=True)
class LinkFailureChain(ChainSpec):
    """Fixed base matrix whose off-diagonal links fail i.i.d. with probability ``rho``."""

    base: np.ndarray
    rho: float
    kind: ClassVar[str] = "link_failure"
    random: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "base", _matrix_list([self.base], "base")[0])
        object.__setattr__(self, "rho", _schedule(self.rho, "rho", 0.0, 1.0, True, True)[0])

    @property
    def n(self):
        return self.base.shape[0]

    @property
    def period(self):
        return 1

    def matrix_at(self, t, rng=None):
        return link_failure_sample(self.base, self.rho, rng)

    def expected_at(self, t):
        off = self.base - np.diag(np.diag(self.base))
        return (1 - self.rho) * off + np.diag(1 - (1 - self.rho) * off.sum(axis=1))

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.tolist(), "rho": self.rho}


def _erdos_renyi_expected(n: int, rho: float) -> np.ndarray:
    # a_ii = E[1/(1+D)], D ~ Bin(n-1, rho); a_ij = rho E[1/(2+D')], D' ~ Bin(n-2, rho)
    k1 = np.arange(n)
    self_w = float(np.sum(binom.pmf(k1, n - 1, rho) / (1 + k1)))
    if n == 1:
        return np.ones((1, 1))
    k2 = np.arange(n - 1)
    other_w = rho * float(np.sum(binom.pmf(k2, n - 2, rho) / (2 + k2)))
    out = np.full((n, n), other_w)
    np.fill_diagonal(out, self_w)
    return out


@dataclass(frozen=True)
class ErdosRenyiChain(ChainSpec):
    """Independent directed Erdos-Renyi graphs with a periodic edge-probability schedule."""

    size: int
    rho: tuple[float, ...]
    kind: ClassVar[str] = "erdos_renyi"
    random: ClassVar[bool] = True

    def __post_init__(self):
        if int(self.size) < 1:
            raise ChainSpecError("erdos_renyi: size must be positive")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "rho", _schedule(self.rho, "rho", 0.0, 1.0, True, True))

    @property
    def n(self):
        return self.size

    @property
    def period(self):
        return len(self.rho)

    def matrix_at(self, t, rng=None):
        return erdos_renyi_sample(self.size, self.rho[t % len(self.rho)], rng)

    def expected_at(self, t):
        return _erdos_renyi_expected(self.size, self.rho[t % len(self.rho)])

    def to_dict(self):
        return {"kind": self.kind, "size": self.size, "rho": list(self.rho)}


@dataclass(frozen=True)
class NoisyAlternatingChain(ChainSpec):
    """``A_even`` at even times, ``A_odd + W`` at odd times with ``W`` uniform on ``{W0, -W0}``."""

    a_even: np.ndarray
    a_odd: np.ndarray
    w0: np.ndarray
    kind: ClassVar[str] = "noisy_example"
    random: ClassVar[bool] = True

    def __post_init__(self):
        a_even, a_odd = _matrix_list([self.a_even, self.a_odd], "noisy_example")
        w0 = np.array(self.w0, dtype=float)
        if w0.shape != a_odd.shape:
            raise ChainSpecError("noisy_example: w0 must match the matrix size")
        for sign in (1, -1):
            report = validate_stochastic(a_odd + sign * w0)
            if not report:
                raise ChainSpecError(f"noisy_example: a_odd {'+-'[sign < 0]} w0 is not stochastic")
        w0.setflags(write=False)
        object.__setattr__(self, "a_even", a_even)
        object.__setattr__(self, "a_odd", a_odd)
        object.__setattr__(self, "w0", w0)

    @property
    def n(self):
        return self.a_even.shape[0]

    @property
    def period(self):
        return 2

    def matrix_at(self, t, rng=None):
        if t % 2 == 0:
            return self.a_even
        return self.a_odd + self.w0 if rng.random() < 0.5 else self.a_odd - self.w0

    def expected_at(self, t):
        return self.a_even if t % 2 == 0 else self.a_odd

    def to_dict(self):
        return {
            "kind": self.kind,
            "a_even": self.a_even.tolist(),
            "a_odd": self.a_odd.tolist(),
            "w0": self.w0.tolist(),
        }


@dataclass(frozen=True)
class InertialAugmentedChain(ChainSpec):
    """The 2n-agent chain built from ``inner`` and a periodic inertia schedule."""

    inner: ChainSpec
    lam: tuple[np.ndarray, ...]
    kind: ClassVar[str] = "inertial_augmented"

    def __post_init__(self):
        object.__setattr__(self, "lam", _inertia_schedule(self.lam, self.inner.n))

    @property
    def random(self):
        return self.inner.random

    @property
    def n(self):
        return 2 * self.inner.n

    @property
    def period(self):
        return _lcm(self.inner.period, len(self.lam))

    def matrix_at(self, t, rng=None):
        return inertial_augmented(self.inner.matrix_at(t, rng), self.lam[t % len(self.lam)])

    def expected_at(self, t):
        return inertial_augmented(self.inner.expected_at(t), self.lam[t % len(self.lam)])

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict(), "lambda": [l.tolist() for l in self.lam]}


@dataclass(frozen=True)
class DiffusionAugmentedChain(ChainSpec):
    """2n-agent chain: ``I`` at odd times, the mixing block of ``A(s-1)`` at time ``2s``.

    ``A(-1)`` does not exist, so time 0 carries the identity; simulations of
    the augmented network start at time 1 with the original priors.
    """

    inner: ChainSpec
    kind: ClassVar[str] = "diffusion_augmented"

    @property
    def random(self):
        return self.inner.random

    @property
    def n(self):
        return 2 * self.inner.n

    def matrix_at(self, t, rng=None):
        if t % 2 == 1 or t == 0:
            return np.eye(self.n)
        return diffusion_augmented_pair(self.inner.matrix_at(t // 2 - 1, rng))[0]

    def expected_at(self, t):
        if t % 2 == 1 or t == 0:
            return np.eye(self.n)
        return diffusion_augmented_pair(self.inner.expected_at(t // 2 - 1))[0]

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict()}


def _inertia_schedule(lam, n: int) -> tuple[np.ndarray, ...]:
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        arr = np.full((1, n), float(arr))
    elif arr.ndim == 1:
        arr = arr[None, :] if arr.shape[0] == n else arr[:, None] * np.ones((1, n))
    if arr.ndim != 2 or arr.shape[1] != n or arr.shape[0] == 0:
        raise ChainSpecError(f"lambda schedule must have rows of length {n}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ChainSpecError("lambda values must lie in [0, 1]")
    rows = tuple(np.array(r) for r in arr)
    for r in rows:
        r.setflags(write=False)
    return rows


CHAIN_KINDS: dict[str, type[ChainSpec]] = {
    cls.kind: cls
    for cls in (
        PeriodicChain,
        DyadicScheduleChain,
        Liu14Chain,
        LinkFailureChain,
        ErdosRenyiChain,
        NoisyAlternatingChain,
        InertialAugmentedChain,
        DiffusionAugmentedChain,
    )
}


def chain_from_dict(d: dict[str, Any]) -> ChainSpec:
    """Build a chain from its plain-dict description (numbers already floats)."""
    kind = d.get("kind")
    if kind not in CHAIN_KINDS:
        raise ChainSpecError(f"unknown chain kind {kind!r}; expected one of {sorted(CHAIN_KINDS)}")
    try:
        if kind == "periodic_deterministic":
            return PeriodicChain(tuple(d["matrices"]))
        if kind == "dyadic_schedule":
            return DyadicScheduleChain(d["initial"], d["even_power"], d["odd_power"], d.get("otherwise"))
        if kind == "liu14":
            return Liu14Chain(d["base"], d["eta"])
        if kind == "link_failure":
            return LinkFailureChain(d["base"], d["rho"])
        if kind == "erdos_renyi":
            return ErdosRenyiChain(d["size"], d["rho"])
        if kind == "noisy_example":
            return NoisyAlternatingChain(d["a_even"], d["a_odd"], d["w0"])
        if kind == "inertial_augmented":
            return InertialAugmentedChain(chain_from_dict(d["inner"]), d["lambda"])
        return DiffusionAugmentedChain(chain_from_dict(d["inner"]))
    except KeyError as exc:
        raise ChainSpecError(f"chain kind {kind!r} is missing field {exc.args[0]!r}") from None


def chain_matrix_at(spec: ChainSpec, t: int, rng=None) -> np.ndarray:
    return spec.matrix_at(t, rng)


def draw_window(spec: ChainSpec, t_end: int, rng=None) -> list[np.ndarray]:
    """Realize ``A(0), ..., A(t_end - 1)`` in order."""
    return [spec.matrix_at(t, rng) for t in range(t_end)]
