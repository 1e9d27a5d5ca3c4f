"""Memoryless sources, letter-typical sets and typical-sequence source codes.

A sequence ``x^n`` is ``eps``-letter-typical for ``p`` when every letter
count satisfies ``|N(a|x^n)/n - p(a)| <= eps p(a)``; in particular letters
with ``p(a) = 0`` never occur.

The typical-sequence code indexes typical sequences in lexicographic order
(messages are 0-based). Atypical inputs are mapped to a uniformly drawn
message; the draw uses rejection sampling on fixed-width chunks of seed bits
so the number of consumed bits is observable.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .prob import Pmf, shannon_entropy
from .spectrum import type_table

#: Largest ``alphabet_size ** n`` enumerated exactly.
ENUMERATION_GUARD = 1 << 26

# counts are compared in absolute units with this slack to pin down ties
_COUNT_SLACK = 1e-9


class ScaleGuardError(ValueError):
    """Raised when an exact enumeration would exceed the desk-scale guard."""


class InsufficientSeedError(ValueError):
    """Raised when a seed runs out before a uniform draw is accepted."""


@dataclass(frozen=True)
class Dms:
    """Discrete memoryless source."""

    pmf: Pmf
    description: str = ""

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.pmf)

    def sample(self, n: int, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (n,) if size is None else (size, n)
        return self.pmf.sample(shape, rng)


def _counts_typical(counts: np.ndarray, n: int, p: Pmf, eps: float) -> np.ndarray:
    expected = n * p.probs
    return np.all(np.abs(counts - expected) <= eps * expected + _COUNT_SLACK, axis=-1)


def is_typical(x, p: Pmf, eps: float) -> bool:
    """Letter-typicality test of one sequence."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= p.alphabet_size):
        raise ValueError("symbol outside alphabet")
    counts = np.bincount(x, minlength=p.alphabet_size)
    return bool(_counts_typical(counts, x.size, p, eps))


def atypical_probability(p: Pmf, n: int, eps: float) -> float:
    """Exact ``P[X^n not eps-typical]`` via type classes."""
    counts, _, mass = type_table(p, n)
    typ = _counts_typical(counts, n, p, eps)
    return float(max(0.0, 1.0 - mass[typ].sum()))


def atypicality_bound(p: Pmf, n: int, eps: float) -> float:
    """Concentration bound ``2 |V| exp(-n eps^2 mu)`` on the atypical mass."""
    return 2 * p.alphabet_size * math.exp(-n * eps * eps * p.min_support_prob)


def sequences_to_codes(seqs: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Base-``K`` integer code of each row, most significant symbol first."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    weights = alphabet_size ** np.arange(seqs.shape[1] - 1, -1, -1, dtype=np.int64)
    return seqs @ weights


def codes_to_sequences(codes, n: int, alphabet_size: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty(codes.shape + (n,), dtype=np.int64)
    rem = codes.copy()
    for pos in range(n - 1, -1, -1):
        out[..., pos] = rem % alphabet_size
        rem //= alphabet_size
    return out


def check_enumerable(alphabet_size: int, n: int, guard: int = ENUMERATION_GUARD) -> int:
    total = alphabet_size**n
    if total > guard:
        raise ScaleGuardError(
            f"{alphabet_size}^{n} = {total} sequences exceeds the enumeration guard {guard}"
        )
    return total


class SeedBits:
    """Sequential reader over a finite string of seed bits."""

    def __init__(self, bits=()):
        self.bits = np.asarray(bits, dtype=np.uint8).ravel()
        if self.bits.size and self.bits.max() > 1:
            raise ValueError("seed bits must be 0/1")
        self.pos = 0

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def remaining(self) -> int:
        return len(self) - self.pos

    def take(self, k: int) -> int:
        if k > self.remaining:
            raise InsufficientSeedError(
                f"need {k} more seed bits, only {self.remaining} left"
            )
        chunk = self.bits[self.pos : self.pos + k]
        self.pos += k
        value = 0
        for b in chunk:
            value = (value << 1) | int(b)
        return value

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> "SeedBits":
        return cls(rng.integers(0, 2, size=k, dtype=np.uint8))


def draw_width(bound: int) -> int:
    """Bits per rejection-sampling chunk for a uniform draw below ``bound``."""
    return 0 if bound <= 1 else int(bound - 1).bit_length()


def uniform_draw(bound: int, seed: SeedBits) -> int:
    """Uniform integer in ``[0, bound)`` by rejection on ``draw_width`` chunks."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    width = draw_width(bound)
    if width == 0:
        return 0
    while True:
        v = seed.take(width)
        if v < bound:
            return v


def expected_draw_bits(bound: int) -> float:
    """Mean number of seed bits consumed by ``uniform_draw``."""
    width = draw_width(bound)
    return 0.0 if width == 0 else width * (1 << width) / bound


_MAGIC = b"WTKTSI\x00\x01"
_VERSION = 1


@dataclass(frozen=True, eq=False)
class TypicalSetIndex:
    """Lexicographic enumeration of an ``eps``-letter-typical set.

    ``codes`` holds the base-``K`` integer of each sequence in increasing
    order, so message ``m`` is the ``m``-th smallest typical sequence.
    """

    n: int
    eps: float
    pmf: Pmf
    codes: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.codes.size)

    def __len__(self) -> int:
        return self.size

    @property
    def rate(self) -> float:
        return math.log2(self.size) / self.n if self.size else float("-inf")

    @property
    def sequences(self) -> np.ndarray:
        return codes_to_sequences(self.codes, self.n, self.pmf.alphabet_size)

    def sequence(self, m: int) -> np.ndarray:
        if not 0 <= m < self.size:
            raise IndexError(f"message {m} outside [0, {self.size})")
        return codes_to_sequences(self.codes[m], self.n, self.pmf.alphabet_size)

    def lookup_codes(self, codes) -> np.ndarray:
        """Message index for each code, ``-1`` where the code is atypical."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.codes, codes)
        pos_c = np.minimum(pos, max(self.size - 1, 0))
        hit = (pos < self.size) & (self.codes[pos_c] == codes) if self.size else np.zeros(codes.shape, bool)
        return np.where(hit, pos_c, -1)

    def index_of(self, x) -> int | None:
        code = sequences_to_codes(np.asarray(x)[None, :], self.pmf.alphabet_size)[0]
        m = int(self.lookup_codes(code))
        return None if m < 0 else m

    def to_bytes(self) -> bytes:
        eps_text = repr(float(self.eps)).encode("ascii")
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<HIH", _VERSION, self.n, len(eps_text)))
        buf.write(eps_text)
        buf.write(struct.pack("<I", self.pmf.alphabet_size))
        buf.write(self.pmf.probs.astype("<f8").tobytes())
        buf.write(struct.pack("<Q", self.size))
        buf.write(self.codes.astype("<u8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "TypicalSetIndex":
        view = memoryview(data)
        if bytes(view[:8]) != _MAGIC:
            raise ValueError("not a typical-set index file")
        version, n, elen = struct.unpack_from("<HIH", view, 8)
        if version != _VERSION:
            raise ValueError(f"unsupported index version {version}")
        off = 8 + 8
        eps = float(bytes(view[off : off + elen]).decode("ascii"))
        off += elen
        (k,) = struct.unpack_from("<I", view, off)
        off += 4
        probs = np.frombuffer(view[off : off + 8 * k], dtype="<f8").copy()
        off += 8 * k
        (count,) = struct.unpack_from("<Q", view, off)
        off += 8
        codes = np.frombuffer(view[off : off + 8 * count], dtype="<u8").astype(np.int64)
        return cls(n=n, eps=eps, pmf=Pmf(probs), codes=codes)

    def save(self, path) -> None:
        from .harness.io import atomic_write_bytes

        atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path) -> "TypicalSetIndex":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def build_typical_index(p: Pmf, n: int, eps: float) -> TypicalSetIndex:
    """Enumerate the ``eps``-letter-typical sequences of length ``n``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = p.alphabet_size
    total = check_enumerable(k, n)
    chunk = 1 << 20
    kept = []
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        counts = np.zeros((codes.size, k), dtype=np.int64)
        rem = codes.copy()
        for _ in range(n):
            counts[np.arange(codes.size), rem % k] += 1
            rem //= k
        kept.append(codes[_counts_typical(counts, n, p, eps)])
    codes = np.concatenate(kept) if kept else np.zeros(0, np.int64)
    index = TypicalSetIndex(n=n, eps=float(eps), pmf=p, codes=codes)
    if index.size:
        h = shannon_entropy(p)
        assert index.rate <= (1 + eps) * h + 1e-9, "typical set larger than 2^{n(1+eps)H}"
    return index


class TsEncoding(NamedTuple):
    m: int
    seed_bits_used: int


def ts_encode(x, index: TypicalSetIndex, seed_bits=()) -> TsEncoding:
    """Typical-sequence encoder.

    Typical inputs map to their own index without touching the seed;
    atypical inputs get a uniform message drawn from ``seed_bits``.
    """
    if index.size == 0:
        raise ValueError("typical set is empty; increase eps or n")
    seed = seed_bits if isinstance(seed_bits, SeedBits) else SeedBits(seed_bits)
    m = index.index_of(x)
    if m is not None:
        return TsEncoding(m, 0)
    before = seed.pos
    m = uniform_draw(index.size, seed)
    return TsEncoding(m, seed.pos - before)


def ts_decode(m: int, index: TypicalSetIndex) -> np.ndarray:
    return index.sequence(m)


def ts_pushforward(index: TypicalSetIndex, p: Pmf | None = None) -> Pmf:
    """Exact law of the encoder output when the source is i.i.d. ``p``."""
    p = index.pmf if p is None else p
    if index.size == 0:
        raise ValueError("typical set is empty; the encoder has no messages")
    seqs = index.sequences
    with np.errstate(divide="ignore"):
        logp = np.log2(p.probs)
    seq_probs = np.exp2(logp[seqs].sum(axis=1))
    atyp = max(0.0, 1.0 - seq_probs.sum())
    probs = seq_probs + atyp / index.size
    return Pmf(probs / probs.sum())


def ts_max_prob_bound(p: Pmf, n: int, eps: float, atypical: float | None = None) -> float:
    """Upper bound ``2^{-n(1-eps)H} / (1 - delta)`` on any message probability.

    ``atypical`` defaults to the exact atypical mass; the concentration bound
    can be passed instead but is vacuous (>= 1) at small ``n``.
    """
    delta = atypical_probability(p, n, eps) if atypical is None else atypical
    if delta >= 1:
        return math.inf
    return 2.0 ** (-n * (1 - eps) * shannon_entropy(p)) / (1 - delta)


class BlockEncoding(NamedTuple):
    messages: tuple[int, ...]
    seed_bits_used: int


def blockwise_ts_code(x, a: int, b: int, index: TypicalSetIndex, seed_bits=()) -> BlockEncoding:
    """Encode ``x^n`` as ``b`` independent sub-blocks of length ``a``.

    ``index`` must be built for length ``a``; all sub-blocks draw from one
    sequential seed.
    """
    x = np.asarray(x)
    if a * b != x.size:
        raise ValueError(f"a*b = {a * b} does not factor n = {x.size}")
    if index.n != a:
        raise ValueError("index blocklength must equal the sub-block length a")
    seed = seed_bits if isinstance(seed_bits, SeedBits) else SeedBits(seed_bits)
    msgs = []
    used = 0
    for block in x.reshape(b, a):
        enc = ts_encode(block, index, seed)
        msgs.append(enc.m)
        used += enc.seed_bits_used
    return BlockEncoding(tuple(msgs), used)


def blockwise_ts_decode(messages, index: TypicalSetIndex) -> np.ndarray:
    return np.concatenate([index.sequence(m) for m in messages])


def expected_seed_bits(index: TypicalSetIndex, blocks: int = 1, p: Pmf | None = None) -> float:
    """Mean seed consumption of ``blocks`` sub-block encodings."""
    p = index.pmf if p is None else p
    return blocks * atypical_probability(p, index.n, index.eps) * expected_draw_bits(index.size)
