"""Exact eavesdropper leakage ``max_m V(p_{Z^n|M_c=m}, p_{Z^n})``."""

from __future__ import annotations

import numpy as np

from ..prob import Pmf
from ..typical import ScaleGuardError, TypicalSetIndex, atypical_probability, ts_pushforward
from .channel import WiretapChannel
from .codebook import WiretapCodebook, sequence_laws

#: Guard on ``|Z|^n`` times the codewords mixed per confidential message.
LEAKAGE_GUARD = 1 << 20


def _weights(values, size: int) -> np.ndarray:
    if values is None:
        return np.full(size, 1.0 / size)
    w = np.asarray(getattr(values, "probs", values), dtype=float)
    if w.shape != (size,):
        raise ValueError(f"message law has {w.size} entries, codebook expects {size}")
    return w


def eve_conditional_laws(cb: WiretapCodebook, ch: WiretapChannel, p_mp=None) -> np.ndarray:
    """``p(z^n | M_c = m)`` for every confidential message; shape ``(nc, |Z|^n)``.

    The cloud index is uniform and the public message follows ``p_mp``.
    """
    n0, nc, np_ = cb.shape
    outputs = ch.z_size**cb.n
    if outputs * n0 * np_ > LEAKAGE_GUARD:
        raise ScaleGuardError(f"{outputs} outputs x {n0 * np_} codewords exceed leakage guard {LEAKAGE_GUARD}")
    wp = _weights(p_mp, np_)
    mix = (np.full(n0, 1.0 / n0)[:, None] * wp[None, :]).ravel()
    pz = ch.p_z_given_x
    laws = np.empty((nc, outputs))
    for m in range(nc):
        words = cb.x_words[:, m, :, :].reshape(-1, cb.n)
        laws[m] = mix @ sequence_laws(words, pz)
    return laws


def message_leakages(laws: np.ndarray, p_mc=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-message distances ``V(p_{Z|m}, p_Z)`` and the unconditional law."""
    wc = _weights(p_mc, laws.shape[0])
    pz = wc @ laws
    return np.abs(laws - pz[None, :]).sum(axis=1), pz


def leakage_exact(cb: WiretapCodebook, ch: WiretapChannel, p_mp: Pmf | None = None, p_mc: Pmf | None = None) -> float:
    """Message-level leakage, maximised over confidential messages with
    positive probability (all of them when ``p_mc`` is uniform)."""
    laws = eve_conditional_laws(cb, ch, p_mp)
    per, _ = message_leakages(laws, p_mc)
    wc = _weights(p_mc, laws.shape[0])
    return float(np.clip(per[wc > 0].max(), 0.0, 2.0))


def source_leakage(cb: WiretapCodebook, ch: WiretapChannel, index: TypicalSetIndex, p_mp=None, p_vc: Pmf | None = None):
    """Leakage about the confidential source block itself.

    A typical block maps to one message; an atypical block to a uniformly
    drawn message, so Eve's law given it is the average of all message
    laws. Returns ``(max over blocks, per-message values, atypical value)``;
    the atypical value is ``nan`` when atypical blocks have zero mass.
    """
    if cb.shape[1] != index.size:
        raise ValueError("codebook confidential size does not match the typical-set index")
    laws = eve_conditional_laws(cb, ch, p_mp)
    p_mc = ts_pushforward(index, p_vc)
    per, pz = message_leakages(laws, p_mc)
    p = index.pmf if p_vc is None else p_vc
    atyp_mass = atypical_probability(p, index.n, index.eps)
    atyp = float(np.abs(laws.mean(axis=0) - pz).sum()) if atyp_mass > 0 else float("nan")
    candidates = per if np.isnan(atyp) else np.append(per, atyp)
    return float(np.clip(candidates.max(), 0.0, 2.0)), per, atyp
