"""Exact laws of per-sequence statistics of i.i.d. sources.

Sequences of a memoryless source with the same type (letter counts) share a
probability, so quantities such as ``P[p(X^n) > t]`` reduce to sums over type
classes. Binary sources use binomial classes directly; larger alphabets fall
back to a dynamic program over bucketed log-probabilities.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .prob import Pmf

#: Bucket width (bits) for the log-probability dynamic program.
LOG_BUCKET = 1e-9

_MAX_TYPES = 2_000_000


def n_types(alphabet_size: int, n: int) -> int:
    return math.comb(n + alphabet_size - 1, alphabet_size - 1)


def iter_types(alphabet_size: int, n: int):
    """Yield every count vector of length ``alphabet_size`` summing to ``n``."""
    k = alphabet_size
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        prev = -1
        counts = []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(n + k - 2 - prev)
        yield tuple(counts)


def type_table(p: Pmf, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All type classes of length-``n`` sequences.

    Returns
    -------
    counts : (T, K) int array
    log2_seq_prob : (T,) probability of one sequence of that type, log2
        (``-inf`` for impossible types)
    class_mass : (T,) total probability of the class
    """
    k = p.alphabet_size
    if n_types(k, n) > _MAX_TYPES:
        raise ValueError("too many type classes to enumerate")
    if k == 2:
        ones = np.arange(n + 1)
        counts = np.stack([n - ones, ones], axis=1)
    else:
        counts = np.array(list(iter_types(k, n)), dtype=np.int64)
    with np.errstate(divide="ignore"):
        logp = np.log2(p.probs)
    # 0 * log 0 = 0
    with np.errstate(invalid="ignore"):
        contrib = np.where(counts > 0, counts * logp, 0.0)
    log_seq = contrib.sum(axis=1)
    lg = np.vectorize(math.lgamma)
    log_coef = (math.lgamma(n + 1) - lg(counts + 1).sum(axis=1)) / math.log(2)
    with np.errstate(invalid="ignore"):
        mass = np.where(np.isfinite(log_seq), np.exp2(log_coef + log_seq), 0.0)
    return counts, log_seq, mass


def log_prob_law(p: Pmf, n: int, bucket: float = LOG_BUCKET):
    """Law of ``log2 p(X^n)`` as sorted support points and masses.

    Exact through type classes when they can be enumerated, otherwise via a
    dynamic program that merges log-probabilities within ``bucket`` bits.
    """
    k = p.alphabet_size
    if n_types(k, n) <= _MAX_TYPES:
        _, log_seq, mass = type_table(p, n)
        keep = mass > 0
        values, masses = log_seq[keep], mass[keep]
    else:
        support = p.support
        steps = np.log2(p.probs[support])
        state = {0: 1.0}
        for _ in range(n):
            nxt: dict[int, float] = {}
            for key, m in state.items():
                for s, w in zip(steps, p.probs[support]):
                    key2 = key + int(round(s / bucket))
                    nxt[key2] = nxt.get(key2, 0.0) + m * w
            state = nxt
        keys = np.array(sorted(state))
        values = keys * bucket
        masses = np.array([state[kk] for kk in keys])
    order = np.argsort(values, kind="stable")
    return values[order], masses[order]


def information_moments(p: Pmf) -> tuple[float, float, float]:
    """``(H, sigma^2, rho)`` of the self-information ``-log2 p(X)``.

    ``sigma^2`` is the varentropy and ``rho`` the third absolute central
    moment, as used by Berry-Esseen bounds.
    """
    s = p.support
    w = p.probs[s]
    info = -np.log2(w)
    h = float(np.dot(w, info))
    dev = info - h
    return h, float(np.dot(w, dev**2)), float(np.dot(w, np.abs(dev) ** 3))
