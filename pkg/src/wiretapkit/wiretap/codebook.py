"""Nested random wiretap codebooks and a two-stage typicality decoder.

Cloud centres ``q^n(i)`` are drawn i.i.d. from ``p_Q``; satellites
``x^n(i, j, s)`` are drawn symbol by symbol from ``p_{X|Q}`` given the cloud
centre. ``i`` indexes clouds, ``j`` the confidential message and ``s`` the
public message.

The decoder uses weak (entropy) joint typicality: a tuple of sequences is
typical when, for every nonempty subset of its components, the empirical
self-information per symbol is within ``eps`` of the subset's joint entropy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..prob import JointPmf, Pmf
from ..typical import ScaleGuardError
from .channel import WiretapChannel

#: Guard on ``(number of codewords) * n`` for codebook generation.
CODEBOOK_GUARD = 1 << 24
#: Guard on ``|Y|^n`` times the number of codewords for exact decoding error.
DECODE_GUARD = 1 << 24
DEFAULT_EPS = 0.3


class WiretapDecodingError(Exception):
    pass


class NoCandidateError(WiretapDecodingError):
    pass


class AmbiguousError(WiretapDecodingError):
    pass


def _count(rate: float, n: int) -> int:
    if rate < 0:
        raise ValueError("rates must be nonnegative")
    return max(1, math.ceil(2.0 ** (n * rate) - 1e-9))


@dataclass(eq=False)
class WiretapCodebook:
    n: int
    p_q: Pmf
    p_x_given_q: np.ndarray
    q_words: np.ndarray = field(repr=False)
    x_words: np.ndarray = field(repr=False)
    seed: int

    @property
    def shape(self) -> tuple[int, int, int]:
        """``(clouds, confidential messages, public messages)``."""
        return self.x_words.shape[:3]

    @property
    def rates(self) -> dict:
        """Realised rates ``log2(count) / n``."""
        n0, nc, np_ = self.shape
        return {"R0": math.log2(n0) / self.n, "Rc": math.log2(nc) / self.n, "Rp": math.log2(np_) / self.n}

    @property
    def p_x(self) -> Pmf:
        return Pmf(self.p_q.probs @ self.p_x_given_q)

    def joint_qx(self) -> JointPmf:
        return JointPmf(self.p_q.probs[:, None] * self.p_x_given_q)


def _as_qx(p_qx) -> tuple[Pmf, np.ndarray]:
    if isinstance(p_qx, Pmf):
        return Pmf([1.0]), p_qx.probs[None, :].copy()
    if isinstance(p_qx, JointPmf):
        t = p_qx.probs
    elif isinstance(p_qx, tuple):
        pq, cond = p_qx
        cond = np.atleast_2d(np.asarray(cond, dtype=float))
        cond = cond / cond.sum(axis=1, keepdims=True)
        return (pq if isinstance(pq, Pmf) else Pmf(pq)), cond
    else:
        t = np.asarray(p_qx, dtype=float)
    if t.ndim != 2:
        raise ValueError("p_QX must be a (|Q|, |X|) table")
    pq = Pmf(t.sum(axis=1))
    cond = np.divide(t, t.sum(axis=1, keepdims=True), out=np.full_like(t, 1.0 / t.shape[1]), where=t.sum(axis=1, keepdims=True) > 0)
    return pq, cond


def _sample_rows(cdf_rows: np.ndarray, draws: np.ndarray) -> np.ndarray:
    idx = (draws[..., None] >= cdf_rows[..., :-1]).sum(axis=-1)
    return idx.astype(np.int64)


def build_codebook_counts(p_qx, n: int, n0: int, nc: int, np_: int, seed: int) -> WiretapCodebook:
    """Codebook with explicit message-set sizes."""
    pq, cond = _as_qx(p_qx)
    total = n0 * nc * np_
    if total * n > CODEBOOK_GUARD:
        raise ScaleGuardError(f"{total} codewords of length {n} exceed guard {CODEBOOK_GUARD}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xC0DE])))
    q_words = pq.sample((n0, n), rng)
    cdf = np.cumsum(cond, axis=1)
    draws = rng.random((n0, nc, np_, n))
    rows = cdf[np.broadcast_to(q_words[:, None, None, :], draws.shape)]
    x_words = _sample_rows(rows, draws)
    return WiretapCodebook(n, pq, cond, q_words, x_words, seed)


def build_codebook(p_qx, n: int, R0: float, Rc: float, Rp: float, seed: int) -> WiretapCodebook:
    """Random nested codebook with ``ceil(2^{nR})`` entries per index."""
    return build_codebook_counts(p_qx, n, _count(R0, n), _count(Rc, n), _count(Rp, n), seed)


def wiretap_encode(i: int, j: int, s: int, cb: WiretapCodebook) -> np.ndarray:
    return cb.x_words[i, j, s]


class TypicalityDecoder:
    """Bob's decoder: unique cloud ``i`` typical with ``y``, then unique
    ``(j, s)`` with ``(q(i), x(i, j, s), y)`` typical."""

    def __init__(self, cb: WiretapCodebook, ch: WiretapChannel, eps: float = DEFAULT_EPS):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.cb, self.ch, self.eps = cb, ch, eps
        qxy = cb.p_q.probs[:, None, None] * cb.p_x_given_q[:, :, None] * ch.p_y_given_x[None, :, :]
        self.joint = JointPmf(qxy)
        self._subsets = {}
        for r in (1, 2, 3):
            for axes in itertools.combinations(range(3), r):
                table = qxy.sum(axis=tuple(a for a in range(3) if a not in axes))
                with np.errstate(divide="ignore"):
                    info = -np.log2(table)
                self._subsets[axes] = (info, self.joint.entropy(axes))

    def _typical(self, axes, seqs) -> np.ndarray:
        """Typicality of a broadcastable tuple of index arrays ``(..., n)``."""
        info, h = self._subsets[axes]
        vals = info[tuple(seqs)].mean(axis=-1)
        return np.isfinite(vals) & (np.abs(vals - h) <= self.eps)

    def stage_one(self, y: np.ndarray) -> np.ndarray:
        """Mask of clouds typical with each ``y``; shape ``(B, n0)``."""
        q = self.cb.q_words[None, :, :]
        yb = y[:, None, :]
        ok = self._typical((2,), (yb,)) & self._typical((0,), (q,)) & self._typical((0, 2), (q, yb))
        return np.broadcast_to(ok, (y.shape[0], q.shape[1])).copy()

    def stage_two(self, y: np.ndarray, i: np.ndarray) -> np.ndarray:
        """Mask over ``(j, s)`` for each row; shape ``(B, nc, np)``."""
        q = self.cb.q_words[i][:, None, None, :]
        x = self.cb.x_words[i]
        yb = y[:, None, None, :]
        ok = np.ones(x.shape[:3], dtype=bool)
        for axes in self._subsets:
            seqs = [(q, x, yb)[a] for a in axes]
            ok &= self._typical(axes, seqs)
        return ok

    def decode_batch(self, y) -> np.ndarray:
        """``(B, 3)`` array of decoded ``(i, j, s)``; ``-1`` marks an error."""
        y = np.atleast_2d(np.asarray(y, dtype=np.int64))
        out = np.full((y.shape[0], 3), -1, dtype=np.int64)
        s1 = self.stage_one(y)
        good = s1.sum(axis=1) == 1
        rows = np.flatnonzero(good)
        if rows.size:
            i = s1[rows].argmax(axis=1)
            s2 = self.stage_two(y[rows], i)
            flat = s2.reshape(rows.size, -1)
            unique = flat.sum(axis=1) == 1
            js = np.unravel_index(flat.argmax(axis=1), s2.shape[1:])
            sel = rows[unique]
            out[sel, 0] = i[unique]
            out[sel, 1] = js[0][unique]
            out[sel, 2] = js[1][unique]
        return out

    def decode(self, y) -> tuple[int, int, int]:
        y = np.asarray(y, dtype=np.int64)
        s1 = self.stage_one(y[None, :])[0]
        hits = np.flatnonzero(s1)
        if hits.size == 0:
            raise NoCandidateError("no cloud centre is typical with y")
        if hits.size > 1:
            raise AmbiguousError(f"{hits.size} cloud centres are typical with y")
        i = int(hits[0])
        s2 = self.stage_two(y[None, :], np.array([i]))[0]
        cand = np.argwhere(s2)
        if len(cand) == 0:
            raise NoCandidateError(f"no satellite of cloud {i} is typical with y")
        if len(cand) > 1:
            raise AmbiguousError(f"{len(cand)} satellites of cloud {i} are typical with y")
        return i, int(cand[0][0]), int(cand[0][1])


def bob_decode(y, cb: WiretapCodebook, ch: WiretapChannel, eps: float = DEFAULT_EPS) -> tuple[int, int, int]:
    return TypicalityDecoder(cb, ch, eps).decode(y)


def all_sequences(alphabet: int, n: int) -> np.ndarray:
    codes = np.arange(alphabet**n, dtype=np.int64)
    powers = alphabet ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers) % alphabet


def sequence_laws(words: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """``p(out^n | word)`` for each row of ``words`` over all ``|Out|^n``
    outputs in lexicographic order."""
    words = np.asarray(words, dtype=np.int64)
    law = np.ones((words.shape[0], 1))
    for t in range(words.shape[1]):
        law = (law[:, :, None] * kernel[words[:, t]][:, None, :]).reshape(words.shape[0], -1)
    return law


def _message_weights(cb: WiretapCodebook, p_mc=None, p_mp=None) -> np.ndarray:
    n0, nc, np_ = cb.shape
    wc = np.full(nc, 1.0 / nc) if p_mc is None else np.asarray(getattr(p_mc, "probs", p_mc), float)
    wp = np.full(np_, 1.0 / np_) if p_mp is None else np.asarray(getattr(p_mp, "probs", p_mp), float)
    return np.full(n0, 1.0 / n0)[:, None, None] * wc[None, :, None] * wp[None, None, :]


def decode_error_exact(cb: WiretapCodebook, ch: WiretapChannel, eps: float = DEFAULT_EPS, p_mc=None, p_mp=None) -> float:
    """Average decoding error by enumerating every ``y^n``.

    ``i`` is uniform; ``j`` and ``s`` follow ``p_mc``/``p_mp`` (uniform by
    default).
    """
    n0, nc, np_ = cb.shape
    words = cb.x_words.reshape(-1, cb.n)
    if ch.y_size**cb.n * len(words) > DECODE_GUARD:
        raise ScaleGuardError("output space too large for exact decoding error")
    ys = all_sequences(ch.y_size, cb.n)
    dec = TypicalityDecoder(cb, ch, eps).decode_batch(ys)
    flat_dec = np.where(dec[:, 0] >= 0, (dec[:, 0] * nc + dec[:, 1]) * np_ + dec[:, 2], -1)
    laws = sequence_laws(words, ch.p_y_given_x)
    correct = flat_dec[None, :] == np.arange(len(words))[:, None]
    success = (laws * correct).sum(axis=1)
    w = _message_weights(cb, p_mc, p_mp).ravel()
    return float(np.clip(1.0 - w @ success, 0.0, 1.0))


def decode_error_mc(cb: WiretapCodebook, ch: WiretapChannel, trials: int, master_seed: int,
                    eps: float = DEFAULT_EPS, chunk: int = 20_000) -> tuple[float, float]:
    """Monte Carlo decoding error with uniform messages: ``(estimate, stderr)``."""
    n0, nc, np_ = cb.shape
    dec = TypicalityDecoder(cb, ch, eps)
    errors = 0
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, c])))
        i = rng.integers(0, n0, size)
        j = rng.integers(0, nc, size)
        s = rng.integers(0, np_, size)
        y, _ = ch.transmit(cb.x_words[i, j, s], rng)
        out = dec.decode_batch(y)
        errors += int(np.count_nonzero(np.any(out != np.column_stack([i, j, s]), axis=1)))
    pe = errors / trials
    return pe, math.sqrt(max(pe * (1 - pe), 0.0) / trials)
