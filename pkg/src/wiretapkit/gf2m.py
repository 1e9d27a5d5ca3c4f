"""Vectorised arithmetic in GF(2^m) for 1 <= m <= 32.

Elements are integers in ``[0, 2^m)`` whose bits are polynomial
coefficients; reduction uses a fixed low-weight irreducible polynomial.
"""

from __future__ import annotations

import numpy as np

# exponents of the non-leading terms of x^m + ... + 1
_POLY_TERMS = {
    1: (0,), 2: (1, 0), 3: (1, 0), 4: (1, 0), 5: (2, 0), 6: (1, 0), 7: (1, 0),
    8: (4, 3, 2, 0), 9: (4, 0), 10: (3, 0), 11: (2, 0), 12: (6, 4, 1, 0),
    13: (4, 3, 1, 0), 14: (10, 6, 1, 0), 15: (1, 0), 16: (12, 3, 1, 0),
    17: (3, 0), 18: (7, 0), 19: (5, 2, 1, 0), 20: (3, 0), 21: (2, 0),
    22: (1, 0), 23: (5, 0), 24: (7, 2, 1, 0), 25: (3, 0), 26: (6, 2, 1, 0),
    27: (5, 2, 1, 0), 28: (3, 0), 29: (2, 0), 30: (23, 2, 1, 0), 31: (3, 0),
    32: (22, 2, 1, 0),
}


def modulus(m: int) -> int:
    """Irreducible modulus polynomial of degree ``m`` as an integer."""
    if m not in _POLY_TERMS:
        raise ValueError(f"GF(2^{m}) not supported (1 <= m <= 32)")
    poly = 1 << m
    for e in _POLY_TERMS[m]:
        poly |= 1 << e
    return poly


def _clmul_mod_int(a: int, b: int, poly: int, m: int) -> int:
    r = 0
    top = 1 << m
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return r


def is_irreducible(m: int) -> bool:
    """Rabin-style check that ``modulus(m)`` is irreducible over GF(2)."""
    poly = modulus(m)

    def polymod(a: int) -> int:
        while a.bit_length() >= poly.bit_length():
            a ^= poly << (a.bit_length() - poly.bit_length())
        return a

    def polygcd(a: int, b: int) -> int:
        while b:
            while a.bit_length() >= b.bit_length() and a:
                a ^= b << (a.bit_length() - b.bit_length())
            a, b = b, a
        return a

    def frob(k: int) -> int:
        # x^(2^k) mod poly
        x = 0b10 if m > 1 else polymod(0b10)
        for _ in range(k):
            x = _clmul_mod_int(x, x, poly, m)
        return x

    if frob(m) != polymod(0b10):
        return False
    primes = {q for q in range(2, m + 1) if m % q == 0 and all(q % r for r in range(2, q))}
    for q in primes:
        h = frob(m // q) ^ polymod(0b10)
        if polygcd(poly, h) != 1:
            return False
    return True


class GF2m:
    """Field GF(2^m) with numpy-vectorised multiply and inverse."""

    def __init__(self, m: int):
        self.m = m
        self.poly = modulus(m)
        self.order = 1 << m

    def mul(self, a, b) -> np.ndarray:
        a = np.array(a, dtype=np.uint64, copy=True)
        b = np.array(b, dtype=np.uint64, copy=True)
        a, b = np.broadcast_arrays(a, b)
        a = a.copy()
        b = b.copy()
        r = np.zeros(a.shape, dtype=np.uint64)
        top = np.uint64(self.order)
        poly = np.uint64(self.poly)
        one = np.uint64(1)
        for _ in range(self.m):
            r ^= np.where(b & one, a, np.uint64(0))
            b >>= one
            a <<= one
            a ^= np.where(a & top, poly, np.uint64(0))
        return r

    def pow(self, a, e: int) -> np.ndarray:
        base = np.array(a, dtype=np.uint64)
        result = np.ones(base.shape, dtype=np.uint64)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse in GF(2^m)")
        return self.pow(a, self.order - 2)
