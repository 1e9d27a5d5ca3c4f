"""Sending a confidential and a public source over a degraded binary
wiretap channel.

The public message randomises the wiretap code. In architecture A it is
the raw (non-uniform) output of a typical-set code; in architecture B it
comes from a uniform compression code that shares a seed with Bob, and the
leakage is bounded by the uniform-randomisation leakage plus the distance
of the public message from uniform. At n=6 the error rates are high;
the point is the bookkeeping, not reliability.
"""

import numpy as np

from wiretapkit.prob import Pmf, binary_entropy, shannon_entropy
from wiretapkit.typical import Dms
from wiretapkit.uniform import UcParams, rb_build
from wiretapkit.wiretap import degraded_bsc, make_mux_system, max_confidential_rate, mux_a_run, mux_b_run
from wiretapkit.wiretap.mux import budget_terms

ch = degraded_bsc(0.05, 0.2)
hp = 1 - binary_entropy(0.2) + 1e-6
best, res = max_confidential_rate(ch, hp)
print(f"BSC(0.05)/BSC(0.2): best confidential entropy per use {best:.4f}"
      f" (h(0.2)-h(0.05) = {binary_entropy(0.2) - binary_entropy(0.05):.4f})")

vc, vp = Dms(Pmf.bernoulli(0.3), "confidential"), Dms(Pmf.bernoulli(0.2), "public")
x = Pmf.uniform(2)

a = make_mux_system("A", vc, vp, 4, 0.5, ch, 6, x, codebook_seed=3)
rep = mux_a_run(a, 3000, master_seed=1)
print(f"\narchitecture A: pe={rep.pe:.3f} leakage={rep.leakage:.4f} ue(public)={rep.ue_public:.3f}"
      f" H2/n={rep.h2_public_per_n:.3f} vs I(X;Z|Q)={rep.meta['i_xz_given_q']:.3f}")

comp = rb_build(vp.pmf, UcParams(4, shannon_entropy(vp.pmf) + 0.2, 2), 0.5, 7)
b = make_mux_system("B", vc, vp, 4, 0.5, ch, 6, x, codebook_seed=3, public_compressor=comp)
rep = mux_b_run(b, 3000, master_seed=1)
t = budget_terms(b)
print(f"architecture B: pe={rep.pe:.3f} leakage={rep.leakage:.4f} ue(public)={rep.ue_public:.3f}"
      f" shared seed {b.shared_seed_bits} bits")
print(f"  budget: {t['source_leakage']:.4f} <= {t['source_leakage_uniform']:.4f} + {t['ue_public']:.4f}"
      f" -> {'holds' if t['source_budget_holds'] else 'violated'}")

bad = mux_b_run(b, 3000, master_seed=1, seed_mismatch=True)
print(f"  with a wrong seed at Bob the public error rate jumps from {rep.meta['pe_public']:.3f}"
      f" to {bad.meta['pe_public']:.3f}")
