"""Polar uniform compression of a binary memoryless source.

``A^N = X^N G_N`` with ``G_N`` the ``n``-fold Kronecker power of
``[[1, 0], [1, 1]]`` in natural index order (no bit reversal). Indices whose
conditional entropy ``H(A_i | A^{i-1})`` is close to one are sent in the
clear, the intermediate ones are sent under a one-time pad, and the rest are
re-derived by successive cancellation.

Indices are 0-based. Log-likelihood ratios are ``log P(0) / P(1)`` in nats.
"""

from __future__ import annotations

import io
import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .prob import Pmf
from .typical import ScaleGuardError

#: Largest blocklength handled by exact enumeration.
EXACT_MAX_N = 16
DEFAULT_BETA = 0.25
DEFAULT_SAMPLES = 100_000
_FIXED_SCALE = 1 << 62
_CACHE_MAGIC = b"WTKPOL\x00\x01"
_CACHE_VERSION = 1
_LN2 = math.log(2.0)


def _check_length(N: int) -> int:
    if N < 1 or N & (N - 1):
        raise ValueError(f"blocklength {N} is not a power of two")
    return N


def polar_transform(x) -> np.ndarray:
    """``x G_N`` over GF(2) by butterflies; works on the last axis of a batch.

    The transform is an involution.
    """
    a = np.array(x, dtype=np.uint8, copy=True)
    N = _check_length(a.shape[-1])
    lead = a.shape[:-1]
    half = N // 2
    while half >= 1:
        v = a.reshape(*lead, N // (2 * half), 2, half)
        v[..., 0, :] ^= v[..., 1, :]
        half //= 2
    return a


def _binary_probs(p: Pmf) -> float:
    if p.alphabet_size != 2:
        raise ValueError("polar compression needs a binary source")
    return float(p.probs[1])


def cond_entropy_exact(p: Pmf, N: int) -> np.ndarray:
    """``H(A_i | A^{i-1})`` for every ``i`` by enumerating all ``2^N`` inputs."""
    _check_length(N)
    q = _binary_probs(p)
    if N > EXACT_MAX_N:
        raise ScaleGuardError(f"exact construction limited to N <= {EXACT_MAX_N}")
    codes = np.arange(1 << N, dtype=np.int64)
    shifts = np.arange(N - 1, -1, -1)
    x = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
    ones = x.sum(axis=1)
    probs = (q**ones) * ((1 - q) ** (N - ones))
    a = polar_transform(x)
    a_code = (a.astype(np.int64) << shifts).sum(axis=1)
    prefix_h = [0.0]
    for i in range(1, N + 1):
        mass = np.bincount(a_code >> (N - i), weights=probs, minlength=1 << i)
        mass = mass[mass > 0]
        prefix_h.append(float(-(mass * np.log2(mass)).sum()))
    return np.clip(np.diff(prefix_h), 0.0, 1.0)


def _boxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """LLR of the XOR of two independent bits (exact Jacobian form)."""
    with np.errstate(invalid="ignore"):
        # inf - inf only arises for certain bits, where the correction vanishes
        s = np.nan_to_num(np.abs(a + b), nan=np.inf)
        d = np.nan_to_num(np.abs(a - b), nan=np.inf)
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b)) + np.log1p(np.exp(-s)) - np.log1p(np.exp(-d))


def _sc(llr: np.ndarray, known: np.ndarray | None, mask: np.ndarray | None, leaf_llr: np.ndarray, offset: int):
    """Successive cancellation on a batch of LLR rows.

    ``known`` holds values used at positions where ``mask`` is true (all
    positions when ``mask`` is None, the genie-aided mode); other positions
    get ML decisions with ties to 0. Leaf LLRs are written into
    ``leaf_llr[:, offset + j]``. Returns ``(a_hat, re-encoded x)``.
    """
    n = llr.shape[1]
    if n == 1:
        leaf_llr[:, offset] = llr[:, 0]
        if mask is None:
            a = known[:, offset : offset + 1]
        elif mask[offset]:
            a = known[:, offset : offset + 1]
        else:
            a = (llr < 0).astype(np.uint8)
        return a, a.copy()
    h = n // 2
    first, second = llr[:, :h], llr[:, h:]
    a1, u = _sc(_boxplus(first, second), known, mask, leaf_llr, offset)
    sign = 1.0 - 2.0 * u
    a2, x2 = _sc(second + sign * first, known, mask, leaf_llr, offset + h)
    return np.concatenate([a1, a2], axis=1), np.concatenate([u ^ x2, x2], axis=1)


def _prior_llr(q: float) -> float:
    if q <= 0:
        return math.inf
    if q >= 1:
        return -math.inf
    return math.log((1 - q) / q)


def cond_entropy_mc(p: Pmf, N: int, samples: int, master_seed: int, chunk: int = 4096, return_std: bool = False):
    """Genie-aided estimate of ``H(A_i | A^{i-1})`` from sampled source blocks.

    For each sample the successive-cancellation recursion, fed the true past
    bits, yields ``P(A_i = a_i | a^{i-1})`` exactly; the estimate is the
    sample mean of ``-log2`` of that probability. Chunks are seeded by
    ``(master_seed, chunk_index)``.
    """
    _check_length(N)
    q = _binary_probs(p)
    if q in (0.0, 1.0):
        zeros = np.zeros(N)
        return (zeros, zeros.copy()) if return_std else zeros
    total = np.zeros(N)
    total_sq = np.zeros(N)
    prior = _prior_llr(q)
    for c, start in enumerate(range(0, samples, chunk)):
        size = min(chunk, samples - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, c])))
        x = (rng.random((size, N)) < q).astype(np.uint8)
        a = polar_transform(x)
        leaf = np.empty((size, N))
        _sc(np.full((size, N), prior), a, None, leaf, 0)
        terms = np.logaddexp(0.0, -(1.0 - 2.0 * a) * leaf) / _LN2
        total += terms.sum(axis=0)
        total_sq += (terms**2).sum(axis=0)
    mean = total / samples
    if not return_std:
        return mean
    var = np.maximum(total_sq / samples - mean**2, 0.0)
    return mean, np.sqrt(var / max(samples - 1, 1))


def delta_threshold(N: int, beta: float) -> float:
    return 2.0 ** (-(N**beta))


def construct_sets(entropies, N: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """``v = {i : H_i > 1 - delta}``, ``h = {i : H_i > delta}`` with ``delta = 2^{-N^beta}``."""
    if not 0 < beta < 0.5:
        raise ValueError("beta must lie in ]0, 1/2[")
    ent = np.asarray(entropies, dtype=float)
    if ent.shape != (N,):
        raise ValueError("need one entropy per index")
    delta = delta_threshold(N, beta)
    return np.flatnonzero(ent > 1 - delta), np.flatnonzero(ent > delta)


@dataclass(eq=False)
class PolarConstruction:
    N: int
    p: Pmf
    beta: float
    cond_entropies: np.ndarray
    method: str
    mc_samples: int = 0
    master_seed: int = 0
    cond_std: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.v_set, self.h_set = construct_sets(self.cond_entropies, self.N, self.beta)

    @property
    def delta_N(self) -> float:
        return delta_threshold(self.N, self.beta)

    @property
    def pad_set(self) -> np.ndarray:
        return np.setdiff1d(self.h_set, self.v_set)


def _cache_header(p: Pmf, N: int, beta: float, method: str, samples: int, master_seed: int) -> bytes:
    frac = Fraction(repr(float(p.probs[1])))
    buf = io.BytesIO()
    buf.write(_CACHE_MAGIC)
    buf.write(struct.pack("<HI", _CACHE_VERSION, N))
    for text in (repr(float(beta)), str(frac.numerator), str(frac.denominator), method):
        raw = text.encode("ascii")
        buf.write(struct.pack("<H", len(raw)) + raw)
    buf.write(struct.pack("<QQ", samples, master_seed))
    return buf.getvalue()


def _cache_path(cache_dir, header: bytes) -> Path:
    import hashlib

    return Path(cache_dir) / f"polar-{hashlib.sha256(header).hexdigest()[:16]}.bin"


def construction_to_bytes(c: PolarConstruction) -> bytes:
    header = _cache_header(c.p, c.N, c.beta, c.method, c.mc_samples, c.master_seed)
    fixed = np.round(np.clip(c.cond_entropies, 0.0, 1.0) * _FIXED_SCALE).astype("<i8")
    return header + fixed.tobytes()


def construction_from_bytes(data: bytes, p: Pmf, N: int, beta: float, method: str, samples: int, master_seed: int):
    """Decode a cached construction, or ``None`` when the header does not match."""
    header = _cache_header(p, N, beta, method, samples, master_seed)
    if not data.startswith(header) or len(data) != len(header) + 8 * N:
        return None
    fixed = np.frombuffer(data[len(header) :], dtype="<i8")
    return PolarConstruction(N, p, beta, fixed / _FIXED_SCALE, method, samples, master_seed)


def build_construction(
    p: Pmf, N: int, beta: float = DEFAULT_BETA, method: str = "auto",
    samples: int = DEFAULT_SAMPLES, master_seed: int = 0, cache_dir=None,
) -> PolarConstruction:
    """Compute (or load from ``cache_dir``) the polarization sets for ``p``."""
    _check_length(N)
    if not 0 < beta < 0.5:
        raise ValueError("beta must lie in ]0, 1/2[")
    if method == "auto":
        method = "exact" if N <= EXACT_MAX_N else "monte-carlo"
    if method not in ("exact", "monte-carlo"):
        raise ValueError(f"unknown construction method {method!r}")
    if method == "exact":
        samples, master_seed = 0, 0
    path = None
    if cache_dir is not None:
        header = _cache_header(p, N, beta, method, samples, master_seed)
        path = _cache_path(cache_dir, header)
        if path.exists():
            hit = construction_from_bytes(path.read_bytes(), p, N, beta, method, samples, master_seed)
            if hit is not None:
                return hit
    if method == "exact":
        c = PolarConstruction(N, p, beta, cond_entropy_exact(p, N), "exact")
    else:
        mean, std = cond_entropy_mc(p, N, samples, master_seed, return_std=True)
        c = PolarConstruction(N, p, beta, np.clip(mean, 0.0, 1.0), "monte-carlo", samples, master_seed, std)
    if path is not None:
        from .harness.io import atomic_write_bytes

        os.makedirs(cache_dir, exist_ok=True)
        atomic_write_bytes(path, construction_to_bytes(c))
    return c


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Big-endian integer value of each row of a bit matrix (width <= 62)."""
    w = bits.shape[-1]
    if w > 62:
        raise ValueError("too many bits for an integer message")
    return (bits.astype(np.int64) << np.arange(w - 1, -1, -1)).sum(axis=-1)


def _int_to_bits(values, width: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    return ((v[..., None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8)


class PolarUcCode:
    """Message ``[A[v], A[h \\ v] xor seed]`` of width ``|h|``; seed ``|h \\ v|`` bits."""

    def __init__(self, construction: PolarConstruction):
        self.construction = construction
        self.v_set = construction.v_set
        self.pad_set = construction.pad_set
        self.h_set = np.concatenate([self.v_set, self.pad_set])
        self.seed_len = int(self.pad_set.size)
        q = _binary_probs(construction.p)
        self._prior = _prior_llr(q)
        self._mask = np.zeros(construction.N, dtype=bool)
        self._mask[self.h_set] = True

    # uniform-compressor interface
    @property
    def n(self) -> int:
        return self.construction.N

    @property
    def pmf(self) -> Pmf:
        return self.construction.p

    @property
    def width(self) -> int:
        return int(self.h_set.size)

    @property
    def M(self) -> int:
        return 1 << self.width

    @property
    def seed_bits(self) -> int:
        return self.seed_len

    def _seed_array(self, seed, batch: int) -> np.ndarray:
        if np.isscalar(seed) and not isinstance(seed, np.ndarray):
            seed = _int_to_bits(int(seed), self.seed_len) if self.seed_len else np.zeros(0, np.uint8)
        s = np.asarray(seed, dtype=np.uint8)
        if s.shape[-1] != self.seed_len:
            raise ValueError(f"seed has {s.shape[-1]} bits, code needs {self.seed_len}")
        return np.broadcast_to(s, (batch, self.seed_len))

    def encode_bits(self, x, seed) -> np.ndarray:
        """Message bits for one block or a batch of blocks."""
        x = np.asarray(x, dtype=np.uint8)
        single = x.ndim == 1
        xb = x[None, :] if single else x
        a = polar_transform(xb)
        s = self._seed_array(seed, xb.shape[0])
        msg = np.concatenate([a[:, self.v_set], a[:, self.pad_set] ^ s], axis=1)
        return msg[0] if single else msg

    def decode_bits(self, message, seed) -> np.ndarray:
        msg = np.asarray(message, dtype=np.uint8)
        single = msg.ndim == 1
        mb = msg[None, :] if single else msg
        if mb.shape[1] != self.width:
            raise ValueError(f"message has {mb.shape[1]} bits, code emits {self.width}")
        batch = mb.shape[0]
        s = self._seed_array(seed, batch)
        nv = self.v_set.size
        known = np.zeros((batch, self.n), dtype=np.uint8)
        known[:, self.v_set] = mb[:, :nv]
        known[:, self.pad_set] = mb[:, nv:] ^ s
        leaf = np.empty((batch, self.n))
        _, x = _sc(np.full((batch, self.n), self._prior), known, self._mask, leaf, 0)
        return x[0] if single else x

    def encode(self, x, u) -> int:
        return int(_bits_to_int(self.encode_bits(x, u)))

    def decode(self, m: int, u) -> np.ndarray:
        return self.decode_bits(_int_to_bits(int(m), self.width), u)

    def _enumerate(self, p: Pmf | None):
        N = self.n
        if N > EXACT_MAX_N:
            raise ScaleGuardError(f"exact evaluation limited to N <= {EXACT_MAX_N}")
        q = _binary_probs(self.pmf if p is None else p)
        codes = np.arange(1 << N, dtype=np.int64)
        x = _int_to_bits(codes, N)
        ones = x.sum(axis=1)
        return x, (q**ones) * ((1 - q) ** (N - ones))

    def pushforward(self, p: Pmf | None = None) -> Pmf:
        """Exact message law with a uniform seed (``N <= 16``)."""
        x, probs = self._enumerate(p)
        a = polar_transform(x)
        nv = self.v_set.size
        first = _bits_to_int(a[:, self.v_set]) if nv else np.zeros(len(x), np.int64)
        law = np.bincount(first, weights=probs, minlength=1 << nv)
        # the padded block is independent and uniform
        out = np.repeat(law, 1 << self.seed_len) / (1 << self.seed_len)
        return Pmf(out)

    def first_block_law(self, p: Pmf | None = None) -> Pmf:
        x, probs = self._enumerate(p)
        a = polar_transform(x)
        first = _bits_to_int(a[:, self.v_set]) if self.v_set.size else np.zeros(len(x), np.int64)
        return Pmf(np.bincount(first, weights=probs, minlength=1 << self.v_set.size))

    def exact_pe(self, p: Pmf | None = None) -> float:
        """Exact reconstruction error; decoding does not depend on the seed."""
        x, probs = self._enumerate(p)
        zero = np.zeros(self.seed_len, dtype=np.uint8)
        xhat = self.decode_bits(self.encode_bits(x, zero), zero)
        wrong = np.any(xhat != x, axis=1)
        return float(probs[wrong].sum())


def polar_uc_encode(x, seed_bits, code: PolarUcCode) -> np.ndarray:
    return code.encode_bits(x, seed_bits)


def polar_uc_decode(message, seed_bits, code: PolarUcCode) -> np.ndarray:
    return code.decode_bits(message, seed_bits)
