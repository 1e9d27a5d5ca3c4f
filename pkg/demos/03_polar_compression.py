"""Polar uniform compression.

After the Kronecker transform, each output bit is either almost free given
the past or almost uniform given the past. The uniform ones are sent as is,
the unsettled middle is sent under a one-time pad, and the rest is
recovered by successive cancellation.

The construction uses 20000 Monte Carlo samples here to stay quick; the
acceptance suite uses 100000.
"""

import time

import numpy as np

from wiretapkit.polar import PolarUcCode, build_construction, cond_entropy_exact
from wiretapkit.prob import Pmf, binary_entropy, kl_divergence

q = 0.11
p = Pmf.bernoulli(q)
print("exact conditional entropies at N=8 for Bern(0.11):")
print(" ", np.round(cond_entropy_exact(p, 8), 3))

print(f"\nSet sizes against H = {binary_entropy(q):.4f}:")
print(f"{'N':>5} {'|H|/N':>7} {'|V|/N':>7} {'pad/N':>7} {'pe':>6} {'ms/block':>9}")
rng = np.random.default_rng(0)
for N in (64, 256, 1024):
    c = build_construction(p, N, 0.25, samples=20_000, master_seed=1)
    code = PolarUcCode(c)
    x = p.sample((500, N), rng).astype(np.uint8)
    seed = rng.integers(0, 2, (500, code.seed_len)).astype(np.uint8)
    t = time.perf_counter()
    xhat = code.decode_bits(code.encode_bits(x, seed), seed)
    ms = 1000 * (time.perf_counter() - t) / 500
    pe = np.mean(np.any(xhat != x, axis=1))
    print(f"{N:>5} {c.h_set.size / N:>7.3f} {c.v_set.size / N:>7.3f} {c.pad_set.size / N:>7.3f} {pe:>6.3f} {ms:>9.3f}")

code = PolarUcCode(build_construction(p, 16, 0.25))
first = code.first_block_law()
print(f"\nN=16: KL(unpadded block || uniform) = {kl_divergence(first, Pmf.uniform(first.alphabet_size)):.4f} bits,"
      f" N*delta = {16 * code.construction.delta_N:.4f}")
