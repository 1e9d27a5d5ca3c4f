"""Seeded invertible extractors on ``m``-bit strings.

An extractor here is any object with ``width`` (input and output bits),
``seed_bits`` and vectorised ``extract(s, u)`` / ``invert(y, u)``, where
``invert(extract(s, u), u) == s`` for every seed ``u``. New constructions
are accepted through :func:`register_extractor`, which checks that
identity before the extractor is used.

The default affine map ``s -> a s + c`` over GF(2^m) spends ``2m`` seed
bits, far more than the ``m - t + 2 log m + 2 log(1/eps)`` achievable by
the best explicit constructions; it is a correctness baseline, not a
seed-efficient extractor.
"""

from __future__ import annotations

import numpy as np

from .gf2m import GF2m


class NonInvertibleExtractorError(ValueError):
    pass


class IdentityExtractor:
    """``s -> s``; spends no seed."""

    name = "identity"

    def __init__(self, width: int):
        self.width = width
        self.seed_bits = 0

    def extract(self, s, u=0):
        return np.asarray(s, dtype=np.uint64)

    def invert(self, y, u=0):
        return np.asarray(y, dtype=np.uint64)


class MultiplierExtractor:
    """``s -> a s`` over GF(2^m) with ``a`` the seed (``a = 0`` read as 1)."""

    name = "gf-multiply"

    def __init__(self, width: int):
        self.width = width
        self.seed_bits = width
        self.field = GF2m(width)

    def _mult(self, u):
        u = np.asarray(u, dtype=np.uint64) & np.uint64(self.field.order - 1)
        return np.where(u == 0, np.uint64(1), u)

    def extract(self, s, u):
        return self.field.mul(s, self._mult(u))

    def invert(self, y, u):
        return self.field.mul(y, self.field.inv(self._mult(u)))


class AffineExtractor:
    """``s -> a s + c`` over GF(2^m) with seed ``u = (a << m) | c``.

    A zero multiplier is read as 1. Averaged over a uniform seed the output
    is exactly uniform because of the additive mask ``c``.
    """

    name = "gf-affine"

    def __init__(self, width: int):
        self.width = width
        self.seed_bits = 2 * width
        self.field = GF2m(width)

    def _split(self, u):
        u = np.asarray(u, dtype=np.uint64)
        mask = np.uint64(self.field.order - 1)
        a = (u >> np.uint64(self.width)) & mask
        c = u & mask
        return np.where(a == 0, np.uint64(1), a), c

    def extract(self, s, u):
        a, c = self._split(u)
        return self.field.mul(s, a) ^ c

    def invert(self, y, u):
        a, c = self._split(u)
        return self.field.mul(np.asarray(y, dtype=np.uint64) ^ c, self.field.inv(a))


EXTRACTORS = {
    IdentityExtractor.name: IdentityExtractor,
    MultiplierExtractor.name: MultiplierExtractor,
    AffineExtractor.name: AffineExtractor,
}


def register_extractor(ext, exhaustive_bits: int = 12, sample: int = 4096, rng_seed: int = 0):
    """Validate invertibility of ``ext`` and return it.

    Inputs are checked exhaustively up to ``exhaustive_bits`` wide and on a
    random sample beyond; seeds likewise (all seeds up to 8 bits).
    """
    rng = np.random.default_rng(rng_seed)
    if ext.width <= exhaustive_bits:
        inputs = np.arange(1 << ext.width, dtype=np.uint64)
    else:
        inputs = rng.integers(0, 1 << ext.width, size=sample, dtype=np.uint64)
    if ext.seed_bits <= 8:
        seeds = np.arange(1 << ext.seed_bits, dtype=np.uint64)
    else:
        seeds = rng.integers(0, 1 << min(ext.seed_bits, 63), size=64, dtype=np.uint64)
    for u in seeds:
        y = np.asarray(ext.extract(inputs, u), dtype=np.uint64)
        if np.any(y >> np.uint64(ext.width)):
            raise NonInvertibleExtractorError("extractor output exceeds its width")
        if not np.array_equal(np.asarray(ext.invert(y, u), dtype=np.uint64), inputs):
            raise NonInvertibleExtractorError(
                f"{getattr(ext, 'name', type(ext).__name__)} is not invertible for seed {int(u)}"
            )
    return ext


def make_extractor(name: str, width: int):
    try:
        cls = EXTRACTORS[name]
    except KeyError:
        raise ValueError(f"unknown extractor {name!r}; choose from {sorted(EXTRACTORS)}") from None
    return register_extractor(cls(width))
