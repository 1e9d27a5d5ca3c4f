"""Wiretap channel model, rate-region check, random codebooks and leakage."""

from .channel import WiretapChannel, channel_from_spec, degraded_bec, degraded_bsc, mutual_informations
from .codebook import WiretapCodebook, bob_decode, build_codebook, build_codebook_counts, wiretap_encode
from .leakage import leakage_exact, source_leakage
from .mux import MuxSystem, make_mux_system, mux_a_run, mux_b_run
from .region import FeasibilityResult, max_confidential_rate, region_feasible

__all__ = [
    "WiretapChannel", "channel_from_spec", "degraded_bec", "degraded_bsc", "mutual_informations",
    "WiretapCodebook", "bob_decode", "build_codebook", "build_codebook_counts", "wiretap_encode",
    "leakage_exact", "source_leakage", "MuxSystem", "make_mux_system", "mux_a_run", "mux_b_run",
    "FeasibilityResult", "max_confidential_rate", "region_feasible",
]
