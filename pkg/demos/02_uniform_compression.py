"""Uniform compression: a short shared seed makes the compressed message
close to uniform without hurting decodability.

Three encoders on a Bern(0.3) source:

* random binning, with and without a seed;
* a typical-set code followed by an invertible affine extractor;
* the converse bound, which no encoder can beat.
"""

import math

import numpy as np

from wiretapkit.extractors import AffineExtractor
from wiretapkit.prob import Pmf, shannon_entropy
from wiretapkit.uniform import (
    ExtractorPipeline,
    UcParams,
    evaluate_exact,
    evaluate_mc,
    rb_build,
    ue_lower_bound,
)

p = Pmf.bernoulli(0.3)
h = shannon_entropy(p)
n = 12
print(f"random binning at n={n}, rate H+0.2 = {h + 0.2:.3f}")
for d in (0, 2, 4, 8, 14):
    reps = [evaluate_exact(rb_build(p, UcParams(n, h + 0.2, d), 0.5, s)) for s in range(5)]
    pe = np.mean([r.pe for r in reps])
    ue = np.mean([r.ue for r in reps])
    print(f"  d={d:>2}  pe={pe:.4f}  ue={ue:.4f}")

# Exact evaluation is preferred; the Monte Carlo histogram overstates ue.
code = rb_build(p, UcParams(10, h + 0.25, 6), 0.3, 0)
ex, mc = evaluate_exact(code), evaluate_mc(code, None, 20_000, master_seed=1)
print(f"\nn=10 code: exact ue {ex.ue:.4f}, Monte Carlo plug-in ue {mc.ue:.4f} from 20000 trials")

pipe = ExtractorPipeline.build(p, 10, 0.3, AffineExtractor)
rep = evaluate_exact(pipe)
print(f"\ntypical code + affine extractor, n=10: M=2^{pipe.width}, seed {pipe.seed_bits} bits")
print(f"  pe={rep.pe:.4f} (the atypical mass)  ue={rep.ue:.2e}")

print("\nconverse: every encoder with M messages and d seed bits has ue >= bound")
M = code.M
for gamma in (M / 64, M / 16, M / 4):
    print(f"  gamma={gamma:8.1f}  bound={ue_lower_bound(p, 10, code.seed_bits, M, gamma):+.4f}  binning ue={ex.ue:.4f}")
print(f"  ({math.log2(M):.2f} message bits vs n H = {10 * h:.2f})")
