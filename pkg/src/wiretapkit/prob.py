"""Exact information measures on finite alphabets.

All logarithms are base 2. ``0 log 0`` is taken as 0, while ``p log(p/0)``
with ``p > 0`` is reported as ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Normalisation tolerance for probability vectors.
TOL = 1e-12


def _as_probs(values, tol: float = TOL) -> np.ndarray:
    probs = np.array(values, dtype=np.float64)
    if probs.size == 0:
        raise ValueError("empty probability vector")
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    total = probs.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"probabilities sum to {total!r}, not 1 within {tol:g}")
    probs /= total
    probs.setflags(write=False)
    return probs


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over ``{0, ..., alphabet_size - 1}``.

    Inputs whose sum drifts from 1 by at most ``TOL`` are renormalised;
    anything further off is rejected.
    """

    probs: np.ndarray = field(repr=False)

    def __init__(self, probs: Sequence[float] | np.ndarray):
        object.__setattr__(self, "probs", _as_probs(probs))

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.alphabet_size

    def __getitem__(self, symbol):
        return self.probs[symbol]

    def __repr__(self) -> str:
        body = ", ".join(f"{p:.6g}" for p in self.probs[:8])
        tail = ", ..." if self.alphabet_size > 8 else ""
        return f"Pmf([{body}{tail}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and bool(
            np.array_equal(self.probs, other.probs)
        )

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @property
    def min_support_prob(self) -> float:
        """Smallest nonzero probability (``mu`` in concentration bounds)."""
        return float(self.probs[self.probs > 0].min())

    @classmethod
    def bernoulli(cls, p: float) -> "Pmf":
        """Binary pmf with ``P[1] = p``."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("Bernoulli parameter must lie in [0, 1]")
        return cls([1.0 - p, p])

    @classmethod
    def uniform(cls, size: int) -> "Pmf":
        if size < 1:
            raise ValueError("alphabet size must be >= 1")
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, symbol: int = 0) -> "Pmf":
        probs = np.zeros(size)
        probs[symbol] = 1.0
        return cls(probs)

    @classmethod
    def from_counts(cls, counts) -> "Pmf":
        counts = np.asarray(counts, dtype=np.float64)
        return cls(counts / counts.sum())

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        """Draw i.i.d. symbols by inverse-CDF lookup."""
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(size), side="right")
        return np.minimum(idx, self.alphabet_size - 1).astype(np.int64)


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf over a product of finite alphabets."""

    probs: np.ndarray = field(repr=False)

    def __init__(self, probs):
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim < 1:
            raise ValueError("joint pmf needs at least one axis")
        flat = _as_probs(arr.ravel())
        object.__setattr__(self, "probs", flat.reshape(arr.shape))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.probs.shape)

    @classmethod
    def product(cls, marginal: Pmf, conditional: np.ndarray) -> "JointPmf":
        """Joint law ``p(a) W(b... | a)`` from a marginal and a kernel whose
        first axis is indexed by ``a``."""
        kernel = np.asarray(conditional, dtype=np.float64)
        if kernel.shape[0] != marginal.alphabet_size:
            raise ValueError("kernel rows must match marginal alphabet")
        shape = (-1,) + (1,) * (kernel.ndim - 1)
        return cls(marginal.probs.reshape(shape) * kernel)

    def marginal(self, axes) -> "Pmf | JointPmf":
        """Marginal over the kept ``axes`` (int or tuple, in given order)."""
        if isinstance(axes, (int, np.integer)):
            axes = (int(axes),)
        axes = tuple(axes)
        drop = tuple(i for i in range(self.probs.ndim) if i not in axes)
        table = self.probs.sum(axis=drop) if drop else self.probs
        kept_sorted = sorted(axes)
        table = np.transpose(table, [kept_sorted.index(a) for a in axes])
        if len(axes) == 1:
            return Pmf(table)
        return JointPmf(table)

    def entropy(self, axes=None) -> float:
        if axes is None:
            return _entropy_of(self.probs.ravel())
        m = self.marginal(axes)
        return _entropy_of(m.probs.ravel())

    def mutual_information(self, a, b, given=()) -> float:
        """``I(A; B | C)`` for disjoint axis groups."""
        a, b, c = _tuple(a), _tuple(b), _tuple(given)

        def h(ax):
            return self.entropy(ax) if ax else 0.0

        return h(a + c) + h(b + c) - h(a + b + c) - h(c)


def _tuple(x) -> tuple[int, ...]:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(x)


def _entropy_of(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return float(-np.sum(nz * np.log2(nz)))


def _check_pmf(p) -> Pmf:
    return p if isinstance(p, Pmf) else Pmf(p)


def binary_entropy(p: float) -> float:
    """``h(p) = -p log p - (1-p) log (1-p)`` in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def shannon_entropy(p) -> float:
    p = _check_pmf(p)
    return _entropy_of(p.probs)


def renyi2_entropy(p) -> float:
    """Collision entropy ``-log2 sum p(x)^2``."""
    p = _check_pmf(p)
    return float(-math.log2(np.dot(p.probs, p.probs)))


def min_entropy(p) -> float:
    p = _check_pmf(p)
    return float(-math.log2(p.probs.max()))


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = _check_pmf(p), _check_pmf(q)
    if p.alphabet_size != q.alphabet_size:
        raise ValueError(
            f"alphabet size mismatch: {p.alphabet_size} vs {q.alphabet_size}"
        )
    return p.probs, q.probs


def variational_distance(p, q) -> float:
    """Unnormalised L1 distance ``sum |p - q|``, in ``[0, 2]``."""
    a, b = _pair(p, q)
    return float(np.abs(a - b).sum())


def kl_divergence(p, q) -> float:
    """``D(p || q)`` in bits; ``inf`` when ``p`` is not dominated by ``q``."""
    a, b = _pair(p, q)
    mask = a > 0
    if np.any(b[mask] == 0):
        return math.inf
    return float(max(0.0, np.sum(a[mask] * (np.log2(a[mask]) - np.log2(b[mask])))))


def optimal_coupling_mismatch(p, q) -> float:
    """Minimal ``P[M != M']`` over couplings of ``p`` and ``q``.

    Equals half the unnormalised variational distance.
    """
    return 0.5 * variational_distance(p, q)


def sample_optimal_coupling(p, q, size: int, rng: np.random.Generator):
    """Draw ``size`` pairs from the maximal (overlap) coupling of ``p`` and ``q``.

    With probability ``w = sum min(p, q)`` both coordinates share a draw from
    ``min(p, q) / w``; otherwise they are drawn independently from the
    normalised positive and negative parts of ``p - q``, which have disjoint
    supports and therefore always disagree.
    """
    a, b = _pair(p, q)
    overlap = np.minimum(a, b)
    w = float(overlap.sum())
    first = np.empty(size, dtype=np.int64)
    second = np.empty(size, dtype=np.int64)
    same = rng.random(size) < w
    k = int(same.sum())
    if k:
        shared = Pmf(overlap / w).sample(k, rng) if w > 0 else np.zeros(k, np.int64)
        first[same] = shared
        second[same] = shared
    rest = size - k
    if rest:
        excess_p = np.clip(a - b, 0.0, None)
        excess_q = np.clip(b - a, 0.0, None)
        first[~same] = Pmf.from_counts(excess_p).sample(rest, rng)
        second[~same] = Pmf.from_counts(excess_q).sample(rest, rng)
    return first, second


def example_distribution(n: int, alpha: float, rate: float) -> Pmf:
    """Skewed public-message law on ``2^{n rate}`` symbols.

    Symbol 0 carries ``2^{-n alpha rate}``; the remainder is spread evenly.
    Only usable when ``2^{n rate}`` is small enough to materialise.
    """
    size = int(round(2.0 ** (n * rate)))
    if size > 1 << 24:
        raise ValueError("alphabet too large to materialise; use example_distribution_entropies")
    head = 2.0 ** (-n * alpha * rate)
    probs = np.full(size, (1.0 - head) / (size - 1))
    probs[0] = head
    return Pmf(probs)


def example_distribution_entropies(n: int, alpha: float, rate: float) -> dict:
    """Shannon, collision and min-entropy of the skewed law at any ``n``.

    The alphabet has two probability classes (one heavy symbol, ``2^{nR} - 1``
    equal light ones), so every sum reduces to two terms evaluated in the
    log domain.
    """
    log_size = n * rate
    log_head = -n * alpha * rate
    head = 2.0 ** log_head
    # log2(2^{nR} - 1) without overflow
    log_rest_count = log_size + math.log2(-math.expm1(-log_size * math.log(2)))
    log_light = math.log2(-math.expm1(log_head * math.log(2))) - log_rest_count
    light_mass = 2.0 ** (log_rest_count + log_light)
    shannon = -head * log_head - light_mass * log_light
    collision_terms = [2 * log_head, log_rest_count + 2 * log_light]
    hi = max(collision_terms)
    log_collision = hi + math.log2(sum(2.0 ** (t - hi) for t in collision_terms))
    return {
        "shannon": shannon,
        "renyi2": -log_collision,
        "min": -max(log_head, log_light),
    }
