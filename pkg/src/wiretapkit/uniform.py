"""Uniform compression codes: seeded lossless source codes with near-uniform output.

A ``(M_n, n, 2^d)`` code maps a source block and a uniform ``d``-bit seed to
one of ``M_n`` messages; its quality is the decoding error ``pe`` and the
distance ``ue`` of the message law from uniform (unnormalised L1).

Two constructions live here:

* random binning, where every ``(x^n, u)`` pair gets an independent uniform
  bin and the decoder looks for the unique typical sequence in the bin;
* a typical-sequence code followed by a seeded invertible extractor.

Messages and seeds are 0-based integers throughout.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .extractors import register_extractor
from .prob import Pmf, kl_divergence, variational_distance
from .spectrum import information_moments, log_prob_law
from .typical import (
    ScaleGuardError,
    SeedBits,
    TypicalSetIndex,
    atypical_probability,
    build_typical_index,
    check_enumerable,
    draw_width,
    sequences_to_codes,
    ts_decode,
    ts_encode,
    ts_pushforward,
)

#: Explicit bin-map storage guard on ``K^n 2^d``.
STORAGE_GUARD = 1 << 26
#: Work guard for exact evaluation of a streamed (regenerated) bin map.
STREAM_GUARD = 1 << 32
#: Universal Berry-Esseen constant for i.i.d. sums.
BERRY_ESSEEN_CONSTANT = 0.4748

_BLOCK_CELLS = 1 << 20


class DecodingError(Exception):
    """Decoder could not produce a unique estimate."""


class NoCandidateError(DecodingError):
    pass


class AmbiguousError(DecodingError):
    pass


@dataclass(frozen=True)
class UcParams:
    """Blocklength, nominal rate and seed length of a uniform compression code.

    The message count is ``round(2^{n rate})``; :attr:`realized_rate` reports
    ``log2(M) / n``.
    """

    n: int
    rate: float
    d: int
    M: int = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.d < 0:
            raise ValueError("seed length must be >= 0")
        object.__setattr__(self, "M", max(1, int(round(2.0 ** (self.n * self.rate)))))

    @property
    def seeds(self) -> int:
        return 1 << self.d

    @property
    def realized_rate(self) -> float:
        return math.log2(self.M) / self.n


@dataclass
class UcReport:
    n: int
    rate: float
    M_n: int
    d_n: int
    pe: float
    ue: float
    ue_kl: float
    method: str
    trials: int = 0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    KEYS = ("n", "rate", "M_n", "d_n", "pe", "ue", "ue_kl", "method", "trials", "seed")

    def __post_init__(self):
        if not (0.0 <= self.pe <= 1.0 + 1e-12):
            raise ValueError("pe outside [0, 1]")
        if not (0.0 <= self.ue <= 2.0 + 1e-12):
            raise ValueError("ue outside [0, 2]")
        if self.method == "exact" and self.trials:
            raise ValueError("exact reports carry zero trials")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.KEYS}

    def to_json(self) -> str:
        from .harness.io import json_text

        return json_text(self.to_dict())


def _message_dtype(M: int):
    if M <= np.iinfo(np.uint16).max + 1:
        return np.uint16
    if M <= np.iinfo(np.uint32).max + 1:
        return np.uint32
    return np.int64


def _seq_probs(p: Pmf, n: int) -> np.ndarray:
    """Probability of every length-``n`` sequence, in code order."""
    k = p.alphabet_size
    probs = np.ones(1)
    for _ in range(n):
        probs = np.outer(probs, p.probs).ravel()
    assert probs.size == k**n
    return probs


@dataclass(eq=False)
class BinningCode:
    """Random binning code ``(x^n, u) -> m``.

    The map is generated column block by column block from
    ``randomization_seed``; it is either stored (``bin_map``, shape
    ``(K^n, 2^d)``) or regenerated on demand. Both paths give the same map.
    """

    params: UcParams
    pmf: Pmf
    eps1: float
    randomization_seed: int
    index: TypicalSetIndex = field(repr=False)
    bin_map: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def M(self) -> int:
        return self.params.M

    @property
    def seed_bits(self) -> int:
        return self.params.d

    @property
    def rows(self) -> int:
        return self.pmf.alphabet_size**self.n

    @property
    def block_cols(self) -> int:
        return max(1, min(self.params.seeds, _BLOCK_CELLS // self.rows))

    def n_blocks(self) -> int:
        return -(-self.params.seeds // self.block_cols)

    def generate_block(self, b: int) -> np.ndarray:
        start = b * self.block_cols
        cols = min(self.block_cols, self.params.seeds - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.randomization_seed, b])))
        return rng.integers(0, self.M, size=(self.rows, cols), dtype=_message_dtype(self.M))

    def iter_blocks(self):
        """Yield ``(first_seed, block)`` over all seed columns."""
        for b in range(self.n_blocks()):
            if self.bin_map is not None:
                start = b * self.block_cols
                yield start, self.bin_map[:, start : start + self.block_cols]
            else:
                yield b * self.block_cols, self.generate_block(b)

    def column(self, u: int) -> np.ndarray:
        if not 0 <= u < self.params.seeds:
            raise ValueError(f"seed {u} outside [0, {self.params.seeds})")
        if self.bin_map is not None:
            return self.bin_map[:, u]
        b, off = divmod(u, self.block_cols)
        return self.generate_block(b)[:, off]

    def lookup(self, codes, seeds) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        seeds = np.asarray(seeds, dtype=np.int64)
        if self.bin_map is not None:
            return self.bin_map[codes, seeds].astype(np.int64)
        out = np.empty(codes.shape, dtype=np.int64)
        blocks = seeds // self.block_cols
        for b in np.unique(blocks):
            sel = blocks == b
            block = self.generate_block(int(b))
            out[sel] = block[codes[sel], seeds[sel] - b * self.block_cols]
        return out

    def encode(self, x, u: int) -> int:
        code = sequences_to_codes(np.asarray(x)[None, :], self.pmf.alphabet_size)[0]
        return int(self.lookup(code, u))

    def decode(self, m: int, u: int) -> np.ndarray:
        return rb_decode(m, u, self)

    def pushforward(self, p: Pmf | None = None) -> Pmf:
        return _binning_exact(self, p)[1]

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_RB_MAGIC)
        eps_text = repr(float(self.eps1)).encode("ascii")
        rate_text = repr(float(self.params.rate)).encode("ascii")
        buf.write(struct.pack("<HII", _RB_VERSION, self.n, self.params.d))
        buf.write(struct.pack("<H", len(rate_text)) + rate_text)
        buf.write(struct.pack("<H", len(eps_text)) + eps_text)
        buf.write(struct.pack("<I", self.pmf.alphabet_size))
        buf.write(self.pmf.probs.astype("<f8").tobytes())
        buf.write(struct.pack("<QQ?", self.M, self.randomization_seed, self.bin_map is not None))
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BinningCode":
        view = memoryview(data)
        if bytes(view[:8]) != _RB_MAGIC:
            raise ValueError("not a binning-code file")
        version, n, d = struct.unpack_from("<HII", view, 8)
        if version != _RB_VERSION:
            raise ValueError(f"unsupported binning-code version {version}")
        off = 18
        texts = []
        for _ in range(2):
            (ln,) = struct.unpack_from("<H", view, off)
            texts.append(bytes(view[off + 2 : off + 2 + ln]).decode("ascii"))
            off += 2 + ln
        (k,) = struct.unpack_from("<I", view, off)
        off += 4
        probs = np.frombuffer(view[off : off + 8 * k], dtype="<f8").copy()
        off += 8 * k
        M, seed, stored = struct.unpack_from("<QQ?", view, off)
        params = UcParams(n=n, rate=float(texts[0]), d=d)
        if params.M != M:
            raise ValueError("stored message count disagrees with rate")
        return rb_build(Pmf(probs), params, float(texts[1]), seed, store=stored)

    def save(self, path) -> None:
        from .harness.io import atomic_write_bytes

        atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path) -> "BinningCode":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


_RB_MAGIC = b"WTKRB\x00\x00\x01"
_RB_VERSION = 1


def rb_build(p: Pmf, params: UcParams, eps1: float, randomization_seed: int, store: bool = True) -> BinningCode:
    """Draw a random binning code; reproducible from ``randomization_seed``.

    With ``store=True`` the map is materialised, subject to
    ``K^n 2^d <= STORAGE_GUARD``.
    """
    k = p.alphabet_size
    rows = k**params.n
    cells = rows * params.seeds
    if store and cells > STORAGE_GUARD:
        raise ScaleGuardError(f"bin map of {cells} cells exceeds storage guard {STORAGE_GUARD}")
    if cells > STREAM_GUARD:
        raise ScaleGuardError(f"bin map of {cells} cells exceeds evaluation guard {STREAM_GUARD}")
    index = build_typical_index(p, params.n, eps1)
    code = BinningCode(params=params, pmf=p, eps1=float(eps1), randomization_seed=int(randomization_seed), index=index)
    if store:
        code.bin_map = np.concatenate([code.generate_block(b) for b in range(code.n_blocks())], axis=1)
    return code


def rb_decode(m: int, u: int, code: BinningCode, index: TypicalSetIndex | None = None) -> np.ndarray:
    """Unique typical sequence in bin ``m`` under seed ``u``."""
    index = code.index if index is None else index
    col = code.column(u)
    cand = np.flatnonzero(col[index.codes] == m)
    if cand.size == 0:
        raise NoCandidateError(f"no typical sequence in bin {m} for seed {u}")
    if cand.size > 1:
        raise AmbiguousError(f"{cand.size} typical sequences share bin {m} for seed {u}")
    return index.sequence(int(cand[0]))


def _binning_exact(code: BinningCode, p: Pmf | None = None):
    p = code.pmf if p is None else p
    probs = _seq_probs(p, code.n)
    typ = code.index.codes
    typ_probs = probs[typ]
    M = code.M
    scale = 1.0 / code.params.seeds
    hist = np.zeros(M)
    success = 0.0
    for _, block in code.iter_blocks():
        cols = block.shape[1]
        hist += np.bincount(block.ravel(), weights=np.repeat(probs * scale, cols), minlength=M)
        if typ.size:
            sub = block[typ].astype(np.int64)
            keys = sub + M * np.arange(cols, dtype=np.int64)[None, :]
            counts = np.bincount(keys.ravel(), minlength=M * cols)
            unique = counts[keys] == 1
            success += float((typ_probs[:, None] * unique).sum()) * scale
    pe = min(1.0, max(0.0, 1.0 - success))
    pmf_m = Pmf(hist / hist.sum())
    return pe, pmf_m


def _uniform(M: int) -> Pmf:
    return Pmf.uniform(M)


def evaluate_exact(code, p: Pmf | None = None) -> UcReport:
    """Exact pushforward of ``(X^n, U)`` through ``code``: ``pe``, ``ue`` and KL."""
    if isinstance(code, BinningCode):
        pe, pmf_m = _binning_exact(code, p)
        rate = code.params.rate
    else:
        pe = code.exact_pe(p)
        pmf_m = code.pushforward(p)
        rate = math.log2(code.M) / code.n
    uni = _uniform(code.M)
    return UcReport(
        n=code.n, rate=rate, M_n=code.M, d_n=code.seed_bits, pe=pe,
        ue=variational_distance(pmf_m, uni), ue_kl=kl_divergence(pmf_m, uni),
        method="exact", trials=0, seed=getattr(code, "randomization_seed", None),
    )


PLUGIN_NOTE = (
    "ue and ue_kl are plug-in estimates from the empirical message histogram; "
    "they are biased upward by sampling noise when trials are not >> M_n"
)


def evaluate_mc(code, p: Pmf | None, trials: int, master_seed: int, chunk: int = 20_000) -> UcReport:
    """Monte Carlo ``pe`` and plug-in ``ue`` from simulated encode/decode runs.

    Trials are split into fixed chunks, each with its own stream derived
    from ``(master_seed, chunk_index)``; partial counts are summed, so the
    report depends only on ``master_seed`` and ``chunk``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = code.pmf if p is None else p
    M = code.M
    hist = np.zeros(M, dtype=np.int64)
    errors = 0
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, c])))
        xs = p.sample((size, code.n), rng)
        us = rng.integers(0, 1 << code.seed_bits, size=size, dtype=np.int64) if code.seed_bits else np.zeros(size, np.int64)
        ms, ok = _simulate(code, xs, us, rng)
        hist += np.bincount(ms, minlength=M)
        errors += int(size - ok.sum())
    emp = Pmf(hist / trials)
    uni = _uniform(M)
    pe = errors / trials
    rate = code.params.rate if isinstance(code, BinningCode) else math.log2(M) / code.n
    return UcReport(
        n=code.n, rate=rate, M_n=M, d_n=code.seed_bits, pe=pe,
        ue=variational_distance(emp, uni), ue_kl=kl_divergence(emp, uni),
        method="monte-carlo", trials=trials, seed=master_seed,
        meta={"ue_estimator": PLUGIN_NOTE, "pe_stderr": math.sqrt(max(pe * (1 - pe), 0.0) / trials)},
    )


def _simulate(code, xs, us, rng):
    """Encode then decode each row; returns messages and a success mask.

    Encoder-local randomness (atypical inputs of the extractor pipeline)
    comes from ``rng``.
    """
    if isinstance(code, BinningCode):
        codes = sequences_to_codes(xs, code.pmf.alphabet_size)
        ms = code.lookup(codes, us)
        ok = np.zeros(len(xs), dtype=bool)
        typical_rows = code.index.lookup_codes(codes) >= 0
        # decoding succeeds iff x is typical and alone among typical rows of its bin
        for u in np.unique(us[typical_rows]):
            sel = np.flatnonzero(typical_rows & (us == u))
            col = code.column(int(u))[code.index.codes].astype(np.int64)
            counts = np.bincount(col, minlength=code.M)
            ok[sel] = counts[ms[sel]] == 1
        return ms, ok
    if isinstance(code, ExtractorPipeline):
        budget = 64 * code.width
        ms = np.array([code.encode(x, int(u), SeedBits.random(budget, rng)) for x, u in zip(xs, us)], dtype=np.int64)
    else:
        ms = np.array([code.encode(x, int(u)) for x, u in zip(xs, us)], dtype=np.int64)
    ok = np.zeros(len(xs), dtype=bool)
    for i, (x, m, u) in enumerate(zip(xs, ms, us)):
        try:
            ok[i] = np.array_equal(code.decode(int(m), int(u)), x)
        except DecodingError:
            ok[i] = False
    return ms, ok


def plugin_ue_law(pmf_m: Pmf, trials: int, rng: np.random.Generator, draws: int = 200) -> tuple[float, float]:
    """Mean and spread of the plug-in ``ue`` estimator under the exact law.

    The mean is exact (bin counts are binomial marginals, and the estimator
    is a sum over bins); the standard deviation is estimated from
    ``draws`` multinomial histograms.
    """
    M = pmf_m.alphabet_size
    u = 1.0 / M
    mean = 0.0
    for pm in np.unique(pmf_m.probs):
        mult = int(np.count_nonzero(pmf_m.probs == pm))
        if pm == 0:
            mean += mult * u
            continue
        sd = math.sqrt(trials * pm * (1 - pm))
        lo = max(0, int(trials * pm - 12 * sd - 2))
        hi = min(trials, int(trials * pm + 12 * sd + 2))
        k = np.arange(lo, hi + 1)
        mean += mult * float(np.dot(stats.binom.pmf(k, trials, pm), np.abs(k / trials - u)))
    samples = rng.multinomial(trials, pmf_m.probs, size=draws) / trials
    spread = float(np.abs(samples - u).sum(axis=1).std(ddof=1))
    return mean, spread


class IdentityCompressor:
    """``x^n -> code(x^n)`` with ``M = K^n`` messages and no seed."""

    def __init__(self, p: Pmf, n: int):
        check_enumerable(p.alphabet_size, n)
        self.pmf = p
        self.n = n
        self.M = p.alphabet_size**n
        self.seed_bits = 0

    def encode(self, x, u: int = 0) -> int:
        return int(sequences_to_codes(np.asarray(x)[None, :], self.pmf.alphabet_size)[0])

    def decode(self, m: int, u: int = 0) -> np.ndarray:
        from .typical import codes_to_sequences

        return codes_to_sequences(m, self.n, self.pmf.alphabet_size)

    def pushforward(self, p: Pmf | None = None) -> Pmf:
        return Pmf(_seq_probs(self.pmf if p is None else p, self.n))

    def exact_pe(self, p: Pmf | None = None) -> float:
        return 0.0


def ue_lower_bound(p: Pmf, n: int, d: int, M: int, gamma: float) -> float:
    """Converse bound ``ue >= 2 (P[p(X^n) > 2^d / gamma] - gamma / M)``.

    Holds for every encoder with ``M`` messages and a ``d``-bit seed. The
    tail is exact over type classes; the strict inequality is evaluated
    with a 1e-9 bit margin toward exclusion, which can only lower the bound.
    """
    if not 0 < gamma < M:
        raise ValueError("gamma must lie in ]0, M[")
    values, masses = log_prob_law(p, n)
    threshold = d - math.log2(gamma)
    tail = float(masses[values > threshold + 1e-9].sum())
    return 2.0 * (tail - gamma / M)


class BerryEsseenWindow(NamedTuple):
    exact: float
    gaussian: float
    bound: float

    @property
    def gap(self) -> float:
        return abs(self.exact - self.gaussian)

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound


def berry_esseen_window(p: Pmf, n: int, a: float, b: float) -> BerryEsseenWindow:
    """Exact and Gaussian mass of the information-spectrum window.

    The window is ``-a < (n H + log2 p(X^n)) / (sigma sqrt n) <= -b``; with
    ``a = inf`` it is a one-sided tail and the bound halves.
    """
    if not a > b > 0:
        raise ValueError("need a > b > 0")
    h, var, rho = information_moments(p)
    if var <= 1e-15:
        raise ValueError("varentropy is zero; the Berry-Esseen window is not applicable")
    sigma = math.sqrt(var)
    values, masses = log_prob_law(p, n)
    s = (n * h + values) / (sigma * math.sqrt(n))
    inside = (s <= -b) & (s > -a)
    exact = float(masses[inside].sum())
    phi = stats.norm.cdf
    gaussian = float(phi(-b) - (0.0 if math.isinf(a) else phi(-a)))
    factor = 1 if math.isinf(a) else 2
    bound = factor * BERRY_ESSEEN_CONSTANT * rho / (sigma**3 * math.sqrt(n))
    return BerryEsseenWindow(exact, gaussian, bound)


@dataclass(eq=False)
class ExtractorPipeline:
    """Typical-sequence code followed by an invertible extractor.

    The typical-set index ``s`` is written on ``width`` bits and mapped to
    ``ext.extract(s, u)``. Atypical inputs draw ``s`` from encoder-local bits.
    """

    index: TypicalSetIndex
    extractor: object

    def __post_init__(self):
        if self.index.size == 0:
            raise ValueError("typical set is empty")
        if self.extractor.width != self.width:
            raise ValueError(
                f"extractor width {self.extractor.width} != typical-code width {self.width}"
            )
        register_extractor(self.extractor)

    @classmethod
    def build(cls, p: Pmf, n: int, eps0: float, extractor_factory) -> "ExtractorPipeline":
        index = build_typical_index(p, n, eps0)
        width = max(1, draw_width(index.size))
        return cls(index, extractor_factory(width))

    @property
    def width(self) -> int:
        return max(1, draw_width(self.index.size))

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def pmf(self) -> Pmf:
        return self.index.pmf

    @property
    def M(self) -> int:
        return 1 << self.width

    @property
    def seed_bits(self) -> int:
        return self.extractor.seed_bits

    def encode(self, x, u: int, local_bits=()) -> int:
        s = ts_encode(x, self.index, local_bits).m
        return int(self.extractor.extract(np.uint64(s), np.uint64(u)))

    def decode(self, m: int, u: int) -> np.ndarray:
        s = int(self.extractor.invert(np.uint64(m), np.uint64(u)))
        if s >= self.index.size:
            raise NoCandidateError(f"message {m} inverts outside the typical set")
        return ts_decode(s, self.index)

    def inner_pushforward(self, p: Pmf | None = None) -> np.ndarray:
        """Law of the typical-code output padded to ``2^width`` values."""
        inner = np.zeros(self.M)
        inner[: self.index.size] = ts_pushforward(self.index, p).probs
        return inner

    def pushforward(self, p: Pmf | None = None) -> Pmf:
        inner = self.inner_pushforward(p)
        seeds = 1 << self.seed_bits
        if seeds * self.M > STORAGE_GUARD:
            raise ScaleGuardError("extractor seed space too large for exact pushforward")
        s = np.arange(self.M, dtype=np.uint64)
        out = np.zeros(self.M)
        for u in range(seeds):
            y = np.asarray(self.extractor.extract(s, np.uint64(u)), dtype=np.int64)
            out += np.bincount(y, weights=inner, minlength=self.M)
        return Pmf(out / out.sum())

    def exact_pe(self, p: Pmf | None = None) -> float:
        p = self.pmf if p is None else p
        return atypical_probability(p, self.n, self.index.eps)

    def encode_pushforward_bare(self, p: Pmf | None = None) -> Pmf:
        """Law of the typical-code output alone, on the same message set."""
        inner = self.inner_pushforward(p)
        return Pmf(inner / inner.sum())


def extractor_pipeline_encode(x, u: int, pipeline: ExtractorPipeline, local_bits=()) -> int:
    return pipeline.encode(x, u, local_bits)


def extractor_pipeline_decode(m: int, u: int, pipeline: ExtractorPipeline) -> np.ndarray:
    return pipeline.decode(m, u)


def min_entropy_target(p: Pmf, n: int, eps0: float, delta: float) -> float:
    """Min-entropy level ``n(1-eps0)H - log2(1 + delta/(1-delta))`` of the
    typical-code output, the extractor's input guarantee."""
    h, _, _ = information_moments(p)
    return n * (1 - eps0) * h - math.log2(1 + delta / (1 - delta))
