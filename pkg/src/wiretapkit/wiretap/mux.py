"""End-to-end multiplexing of a confidential and a public source.

Architecture ``A``: both sources are typical-sequence coded with
encoder-local seed bits, and the non-uniform public message randomises the
wiretap code.

Architecture ``B``: the public source goes through a uniform compression
code that shares its seed with Bob; the wiretap code is evaluated as if the
public message were uniform, and the gap to the real message law is
charged through the triangle inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..prob import Pmf, renyi2_entropy, variational_distance
from ..typical import Dms, SeedBits, TypicalSetIndex, build_typical_index, sequences_to_codes, ts_encode, ts_pushforward
from ..uniform import DecodingError
from .channel import WiretapChannel
from .codebook import DEFAULT_EPS, TypicalityDecoder, WiretapCodebook, build_codebook_counts
from .leakage import LEAKAGE_GUARD, leakage_exact, source_leakage

BUDGET_SLACK = 1e-9


class RateMismatchError(ValueError):
    pass


@dataclass(eq=False)
class MuxSystem:
    architecture: str
    confidential: Dms
    public: Dms
    k: int
    conf_index: TypicalSetIndex
    public_code: object
    channel: WiretapChannel
    codebook: WiretapCodebook
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.architecture not in ("A", "B"):
            raise ValueError("architecture must be 'A' or 'B'")
        if self.architecture == "A" and not isinstance(self.public_code, TypicalSetIndex):
            raise ValueError("architecture A codes the public source with a typical-set index")
        if self.architecture == "B" and isinstance(self.public_code, TypicalSetIndex):
            raise ValueError("architecture B needs a uniform compression code for the public source")
        _, nc, np_ = self.codebook.shape
        if nc != self.conf_index.size:
            raise RateMismatchError(f"codebook has {nc} confidential messages, source code emits {self.conf_index.size}")
        if np_ != self.public_messages:
            raise RateMismatchError(f"codebook has {np_} public messages, source code emits {self.public_messages}")

    @property
    def seed_policy(self) -> str:
        return "encoder-only" if self.architecture == "A" else "shared"

    @property
    def n(self) -> int:
        return self.codebook.n

    @property
    def public_messages(self) -> int:
        if isinstance(self.public_code, TypicalSetIndex):
            return self.public_code.size
        return self.public_code.M

    @property
    def shared_seed_bits(self) -> int:
        return 0 if self.architecture == "A" else self.public_code.seed_bits

    def public_law(self) -> Pmf:
        """Law of the public message; seed-averaged in architecture B."""
        if isinstance(self.public_code, TypicalSetIndex):
            return ts_pushforward(self.public_code, self.public.pmf)
        return self.public_code.pushforward(self.public.pmf)

    def confidential_law(self) -> Pmf:
        return ts_pushforward(self.conf_index, self.confidential.pmf)


def make_mux_system(
    architecture: str, confidential: Dms, public: Dms, k: int, eps0: float,
    channel: WiretapChannel, n: int, p_qx, codebook_seed: int, n0: int = 1,
    public_compressor=None, eps: float = DEFAULT_EPS,
) -> MuxSystem:
    """Build source codes of blocklength ``k`` and a matching codebook of length ``n``."""
    conf_index = build_typical_index(confidential.pmf, k, eps0)
    if conf_index.size == 0:
        raise ValueError(f"confidential typical set is empty at k={k}, eps0={eps0}")
    if architecture == "A":
        public_code = build_typical_index(public.pmf, k, eps0)
        if public_code.size == 0:
            raise ValueError(f"public typical set is empty at k={k}, eps0={eps0}")
        np_ = public_code.size
    else:
        if public_compressor is None:
            raise ValueError("architecture B needs a public compressor")
        public_code = public_compressor
        np_ = public_compressor.M
    cb = build_codebook_counts(p_qx, n, n0, conf_index.size, np_, codebook_seed)
    return MuxSystem(architecture, confidential, public, k, conf_index, public_code, channel, cb, eps)


@dataclass
class MuxReport:
    arch: str
    n: int
    rates: dict
    pe: float
    leakage: float
    leakage_mode: str
    ue_public: float
    h2_public_per_n: float
    seed_bits: float
    master_seed: int
    meta: dict = field(default_factory=dict)

    KEYS = ("arch", "n", "rates", "pe", "leakage", "leakage_mode", "ue_public", "h2_public_per_n", "seed_bits", "master_seed")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.KEYS}

    def to_json(self) -> str:
        from ..harness.io import json_text

        return json_text(self.to_dict())


def _local_encode(x, index: TypicalSetIndex, rng: np.random.Generator):
    codes = sequences_to_codes(x, index.pmf.alphabet_size)
    m = index.lookup_codes(codes)
    bits = 0
    for r in np.flatnonzero(m < 0):
        enc = ts_encode(x[r], index, SeedBits.random(64 * max(1, index.size.bit_length()), rng))
        m[r] = enc.m
        bits += enc.seed_bits_used
    return m, bits


def _leakage(sys: MuxSystem, p_mp: Pmf):
    ch, cb = sys.channel, sys.codebook
    n0, _, np_ = cb.shape
    if ch.z_size**cb.n * n0 * np_ > LEAKAGE_GUARD:
        return None
    src, _, _ = source_leakage(cb, ch, sys.conf_index, p_mp, sys.confidential.pmf)
    msg = leakage_exact(cb, ch, p_mp, sys.confidential_law())
    return src, msg


def _simulate(sys: MuxSystem, trials: int, master_seed: int, seed_mismatch: bool, chunk: int):
    dec = TypicalityDecoder(sys.codebook, sys.channel, sys.eps)
    n0 = sys.codebook.shape[0]
    err_c = err_p = err = 0
    local_bits = 0
    z_hist = {}
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, c])))
        vc = sys.confidential.pmf.sample((size, sys.k), rng)
        vp = sys.public.pmf.sample((size, sys.k), rng)
        mc, bc = _local_encode(vc, sys.conf_index, rng)
        local_bits += bc
        if sys.architecture == "A":
            mp, bp = _local_encode(vp, sys.public_code, rng)
            local_bits += bp
        else:
            d = sys.public_code.seed_bits
            u = rng.integers(0, 1 << d, size) if d else np.zeros(size, np.int64)
            u_dec = (rng.integers(0, 1 << d, size) if d else u) if seed_mismatch else u
            mp = np.array([sys.public_code.encode(vp[r], int(u[r])) for r in range(size)], dtype=np.int64)
        i = rng.integers(0, n0, size)
        y, z = sys.channel.transmit(sys.codebook.x_words[i, mc, mp], rng)
        out = dec.decode_batch(y)
        ok_c = np.zeros(size, bool)
        ok_p = np.zeros(size, bool)
        for r in range(size):
            if out[r, 0] < 0:
                continue
            ok_c[r] = np.array_equal(sys.conf_index.sequence(int(out[r, 1])), vc[r])
            if sys.architecture == "A":
                ok_p[r] = np.array_equal(sys.public_code.sequence(int(out[r, 2])), vp[r])
            else:
                try:
                    ok_p[r] = np.array_equal(sys.public_code.decode(int(out[r, 2]), int(u_dec[r])), vp[r])
                except DecodingError:
                    ok_p[r] = False
        err_c += int(np.count_nonzero(~ok_c))
        err_p += int(np.count_nonzero(~ok_p))
        err += int(np.count_nonzero(~(ok_c & ok_p)))
        zc = sequences_to_codes(z, sys.channel.z_size)
        for m, zz in zip(mc, zc):
            z_hist.setdefault(int(m), []).append(int(zz))
    return err / trials, err_c / trials, err_p / trials, local_bits / trials, z_hist


def _mc_leakage(z_hist: dict, outputs: int) -> float:
    """Plug-in max-over-message leakage from sampled eavesdropper outputs."""
    total = sum(len(v) for v in z_hist.values())
    pz = np.zeros(outputs)
    laws = {}
    for m, zs in z_hist.items():
        h = np.bincount(zs, minlength=outputs).astype(float)
        pz += h
        laws[m] = h / len(zs)
    pz /= total
    return float(max(np.abs(v - pz).sum() for v in laws.values()))


def _report(sys: MuxSystem, trials: int, master_seed: int, seed_mismatch: bool = False, chunk: int = 5_000) -> MuxReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p_mp = sys.public_law()
    pe, pe_c, pe_p, local_bits, z_hist = _simulate(sys, trials, master_seed, seed_mismatch, chunk)
    exact = _leakage(sys, p_mp)
    meta = {"pe_confidential": pe_c, "pe_public": pe_p, "seed_policy": sys.seed_policy,
            "decoder_eps": sys.eps, "typicality": "weak joint typicality over all component subsets"}
    if exact is not None:
        leakage, mode = exact[0], "exact"
        meta["leakage_message_level"] = exact[1]
        meta["leakage_level"] = "source"
    else:
        leakage, mode = _mc_leakage(z_hist, sys.channel.z_size**sys.n), "mc"
        meta["leakage_level"] = "message (plug-in estimate)"
    joint = sys.codebook.joint_qx().probs[:, :, None, None] * sys.channel.kernel[None]
    i_xz_q = _cond_mi_xz(joint)
    meta["i_xz_given_q"] = i_xz_q
    h2 = renyi2_entropy(p_mp) / sys.n
    meta["h2_exceeds_i_xz"] = h2 > i_xz_q
    return MuxReport(
        arch=sys.architecture, n=sys.n, rates=sys.codebook.rates, pe=pe, leakage=leakage,
        leakage_mode=mode, ue_public=variational_distance(p_mp, Pmf.uniform(p_mp.alphabet_size)),
        h2_public_per_n=h2, seed_bits=local_bits + sys.shared_seed_bits,
        master_seed=master_seed, meta=meta,
    )


def _cond_mi_xz(joint: np.ndarray) -> float:
    """``I(X;Z|Q)`` from a ``(Q, X, Y, Z)`` table."""
    from ..prob import JointPmf

    return JointPmf(joint).mutual_information(1, 3, given=0)


def mux_a_run(sys: MuxSystem, trials: int, master_seed: int) -> MuxReport:
    """Simulate architecture A: encoder-only seed, non-uniform public randomisation."""
    if sys.architecture != "A":
        raise ValueError("system is not configured for architecture A")
    return _report(sys, trials, master_seed)


def budget_terms(sys: MuxSystem) -> dict:
    """Exact terms of the triangle-inequality chain for architecture B.

    ``leakage`` uses the real public law, ``leakage_uniform`` an exactly
    uniform public message, and ``ue_public`` is ``V(p_Mp, uniform)``.
    """
    cb, ch = sys.codebook, sys.channel
    p_mp = sys.public_law()
    uni = Pmf.uniform(p_mp.alphabet_size)
    p_mc = sys.confidential_law()
    ue = variational_distance(p_mp, uni)
    out = {"ue_public": ue}
    for level in ("message", "source"):
        if level == "message":
            leak, leak_u = leakage_exact(cb, ch, p_mp, p_mc), leakage_exact(cb, ch, uni, p_mc)
        else:
            leak = source_leakage(cb, ch, sys.conf_index, p_mp, sys.confidential.pmf)[0]
            leak_u = source_leakage(cb, ch, sys.conf_index, uni, sys.confidential.pmf)[0]
        out[f"{level}_leakage"] = leak
        out[f"{level}_leakage_uniform"] = leak_u
        out[f"{level}_budget"] = leak_u + ue
        out[f"{level}_budget_holds"] = leak <= leak_u + ue + BUDGET_SLACK
        # valid for any confidential law: both the conditional and the
        # unconditional eavesdropper laws move by at most ue
        out[f"{level}_budget_general"] = leak_u + 2 * ue
    return out


def mux_b_run(sys: MuxSystem, trials: int, master_seed: int, seed_mismatch: bool = False) -> MuxReport:
    """Simulate architecture B with a shared seed between encoder and Bob.

    With ``seed_mismatch`` Bob uses an independent seed, which breaks public
    reconstruction.
    """
    if sys.architecture != "B":
        raise ValueError("system is not configured for architecture B")
    rep = _report(sys, trials, master_seed, seed_mismatch)
    if rep.leakage_mode == "exact":
        rep.meta["budget"] = budget_terms(sys)
    return rep
