"""Typical sets: how few sequences carry most of the probability.

Run with ``python3 demos/01_typical_sets.py``.
"""

import math

import numpy as np

from wiretapkit.prob import Pmf, shannon_entropy
from wiretapkit.typical import (
    SeedBits,
    atypical_probability,
    build_typical_index,
    ts_decode,
    ts_encode,
    ts_pushforward,
)

p = Pmf.bernoulli(0.3)
h = shannon_entropy(p)
eps = 0.3
print(f"source Bern(0.3), H = {h:.4f} bits/symbol, eps = {eps}")
print(f"{'n':>3} {'|T|':>8} {'log2|T|/n':>10} {'P[atypical]':>12} {'max p(m)':>10}")
for n in (4, 8, 12, 16):
    index = build_typical_index(p, n, eps)
    if index.size == 0:
        print(f"{n:>3} {'empty':>8}")
        continue
    law = ts_pushforward(index)
    print(f"{n:>3} {index.size:>8} {index.rate:>10.4f} {atypical_probability(p, n, eps):>12.4f} {law.probs.max():>10.2e}")

# The code itself: typical blocks get their rank, atypical ones a random rank.
index = build_typical_index(p, 12, eps)
rng = np.random.default_rng(0)
x = p.sample(12, rng)
enc = ts_encode(x, index, SeedBits.random(64, rng))
back = ts_decode(enc.m, index)
print()
print("block     ", "".join(map(str, x)))
print("message   ", enc.m, f"(of {index.size}, {math.ceil(math.log2(index.size))} bits)")
print("decoded   ", "".join(map(str, back)), "exact" if np.array_equal(back, x) else "wrong (block was atypical)")
print("seed bits ", enc.seed_bits_used)
