import json
import math

import numpy as np
import pytest
from scipy import stats

import oracles
from wiretapkit.extractors import AffineExtractor, IdentityExtractor, make_extractor
from wiretapkit.prob import Pmf, shannon_entropy, variational_distance
from wiretapkit.typical import ScaleGuardError, SeedBits, build_typical_index, ts_pushforward
from wiretapkit.uniform import (
    AmbiguousError,
    BinningCode,
    ExtractorPipeline,
    IdentityCompressor,
    NoCandidateError,
    UcParams,
    UcReport,
    berry_esseen_window,
    evaluate_exact,
    evaluate_mc,
    extractor_pipeline_decode,
    extractor_pipeline_encode,
    min_entropy_target,
    plugin_ue_law,
    rb_build,
    rb_decode,
    ue_lower_bound,
)

B3 = Pmf.bernoulli(0.3)
H3 = shannon_entropy(B3)


def _code(n, excess, d, eps1=0.3, seed=0, p=B3, store=True):
    return rb_build(p, UcParams(n, shannon_entropy(p) + excess, d), eps1, seed, store=store)


# parameter and report types

def test_params_rounding():
    prm = UcParams(10, 0.5, 3)
    assert prm.M == 32 and prm.seeds == 8
    assert prm.realized_rate == pytest.approx(0.5)
    assert UcParams(3, 0.01, 0).M == 1


@pytest.mark.parametrize("kw", [dict(n=0, rate=1, d=0), dict(n=3, rate=0, d=0), dict(n=3, rate=1, d=-1)])
def test_params_reject(kw):
    with pytest.raises(ValueError):
        UcParams(**kw)


def test_report_validation_and_keys():
    with pytest.raises(ValueError):
        UcReport(n=1, rate=1, M_n=2, d_n=0, pe=1.5, ue=0, ue_kl=0, method="exact")
    with pytest.raises(ValueError):
        UcReport(n=1, rate=1, M_n=2, d_n=0, pe=0, ue=0, ue_kl=0, method="exact", trials=5)
    r = UcReport(n=1, rate=1, M_n=2, d_n=0, pe=0, ue=0, ue_kl=0, method="exact", meta={"x": 1})
    assert set(json.loads(r.to_json())) == {"n", "rate", "M_n", "d_n", "pe", "ue", "ue_kl", "method", "trials", "seed"}


# random binning

def test_single_message_code():
    code = rb_build(B3, UcParams(6, 0.01, 2), 0.3, 1)
    assert code.M == 1
    assert np.all(code.bin_map == 0)
    assert evaluate_exact(code).ue == 0.0


def test_build_is_deterministic():
    a, b = _code(8, 0.2, 4, seed=9), _code(8, 0.2, 4, seed=9)
    assert np.array_equal(a.bin_map, b.bin_map)
    assert not np.array_equal(a.bin_map, _code(8, 0.2, 4, seed=10).bin_map)


def test_streamed_columns_match_stored():
    stored = _code(10, 0.25, 6)
    streamed = _code(10, 0.25, 6, store=False)
    assert streamed.bin_map is None
    for u in (0, 17, 63):
        assert np.array_equal(stored.column(u), streamed.column(u))


def test_occupancy_chi_square_window():
    code = _code(8, 0.2, 8)
    # independent pass: a plain Python tally of every cell
    tally = [0] * code.M
    for row in code.bin_map.tolist():
        for v in row:
            tally[v] += 1
    tally = np.array(tally)
    assert np.array_equal(tally, np.bincount(code.bin_map.ravel(), minlength=code.M))
    cells = code.bin_map.size
    chi2 = float(((tally - cells / code.M) ** 2).sum() / (cells / code.M))
    lo, hi = stats.chi2.ppf([0.0005, 0.9995], code.M - 1)
    assert lo < chi2 < hi


def test_storage_guard():
    with pytest.raises(ScaleGuardError):
        _code(16, 0.2, 11)
    _code(16, 0.2, 11, store=False)
    with pytest.raises(ScaleGuardError):
        _code(20, 0.2, 13, store=False)


def test_decode_singleton_bin():
    code = _code(10, 0.25, 6)
    for u in range(4):
        col = code.column(u)
        typ = col[code.index.codes]
        counts = np.bincount(typ, minlength=code.M)
        i = int(np.flatnonzero(counts[typ] == 1)[0])
        x = code.index.sequence(i)
        assert np.array_equal(rb_decode(code.encode(x, u), u, code), x)


def test_decode_ambiguous_and_empty():
    code = _code(10, 0.25, 6)
    col = code.column(0)
    counts = np.bincount(col[code.index.codes], minlength=code.M)
    with pytest.raises(AmbiguousError):
        rb_decode(int(np.flatnonzero(counts >= 2)[0]), 0, code)
    with pytest.raises(NoCandidateError):
        rb_decode(int(np.flatnonzero(counts == 0)[0]), 0, code)


def test_exact_pe_matches_enumeration_oracle():
    code = _code(10, 0.25, 6)
    rep = evaluate_exact(code)
    brute = oracles.binning_pe(code.bin_map, [0.7, 0.3], 10, code.index.codes)
    assert rep.pe == pytest.approx(brute, abs=1e-12)
    # frozen from the enumeration oracle
    assert code.M == 2544
    assert rep.pe == pytest.approx(0.74536693833, abs=1e-10)
    assert rep.ue == pytest.approx(0.31820123661690, abs=1e-12)
    pushed = oracles.binning_pushforward(code.bin_map, [0.7, 0.3], 10, code.M)
    assert rep.ue == pytest.approx(variational_distance(Pmf(pushed), Pmf.uniform(code.M)), abs=1e-12)
    assert rep.method == "exact" and rep.trials == 0


def test_pushforward_conserves_mass():
    for code in (_code(10, 0.25, 6), _code(9, 0.1, 5, store=False)):
        assert abs(code.pushforward().probs.sum() - 1) <= 1e-12


def test_deterministic_source_uniformity():
    p = Pmf.point_mass(2, 0)
    code = rb_build(p, UcParams(6, 0.5, 3), 0.1, 4)
    rep = evaluate_exact(code)
    assert rep.pe == 0.0
    # one input, eight seeds: at most eight occupied bins
    assert rep.ue >= 2 * (1 - 8 / code.M) - 1e-12
    ident = evaluate_exact(IdentityCompressor(p, 6))
    assert ident.pe == 0.0
    assert ident.ue == pytest.approx(2 * (1 - 1 / 64), abs=1e-12)


def test_mc_agrees_with_exact_pe():
    code = _code(10, 0.25, 6)
    ex = evaluate_exact(code)
    mc = evaluate_mc(code, None, 20000, master_seed=11)
    assert abs(mc.pe - ex.pe) <= 3 * math.sqrt(ex.pe * (1 - ex.pe) / 20000)
    assert mc.method == "monte-carlo" and mc.trials == 20000
    assert "biased" in mc.meta["ue_estimator"]


def test_mc_ue_band_n12():
    code = _code(12, 0.2, 14, eps1=0.5)
    ex = evaluate_exact(code)
    mc = evaluate_mc(code, None, 100_000, master_seed=3)
    mean, spread = plugin_ue_law(code.pushforward(), 100_000, np.random.default_rng(0))
    # the plug-in estimator concentrates around its own mean, not around ue
    assert abs(mc.ue - mean) <= 3 * spread
    assert mean >= ex.ue


def test_mc_deterministic_and_single_trial():
    code = _code(8, 0.2, 4)
    assert evaluate_mc(code, None, 500, 5).to_dict() == evaluate_mc(code, None, 500, 5).to_dict()
    assert evaluate_mc(code, None, 1, 5).pe in (0.0, 1.0)
    with pytest.raises(ValueError):
        evaluate_mc(code, None, 0, 5)


def test_mc_chunking_is_part_of_the_plan():
    code = _code(8, 0.2, 4)
    a = evaluate_mc(code, None, 3000, 5, chunk=1000)
    b = evaluate_mc(code, None, 3000, 5, chunk=1000)
    assert a.pe == b.pe


def test_serialization_roundtrip(tmp_path):
    code = _code(9, 0.2, 5, seed=77)
    back = BinningCode.from_bytes(code.to_bytes())
    assert np.array_equal(back.bin_map, code.bin_map)
    assert back.params == code.params and back.eps1 == code.eps1
    path = tmp_path / "code.bin"
    code.save(path)
    assert evaluate_exact(BinningCode.load(path)).to_dict() == evaluate_exact(code).to_dict()
    with pytest.raises(ValueError):
        BinningCode.from_bytes(b"WTKRB\x00\x00\x09" + code.to_bytes()[8:])


def _mean_se(vals):
    vals = np.asarray(vals)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(len(vals))


def _trend(ns, seeds=10):
    out = []
    for n in ns:
        d = math.ceil(4 * math.sqrt(n))
        reps = [evaluate_exact(_code(n, 0.2, d, eps1=0.5, seed=s, store=n < 16)) for s in range(seeds)]
        out.append((_mean_se([r.ue for r in reps]), _mean_se([r.pe for r in reps])))
    return out


def _assert_non_increasing(rows):
    for (ue0, pe0), (ue1, pe1) in zip(rows, rows[1:]):
        assert ue1[0] <= ue0[0] + 2 * (ue0[1] + ue1[1])
        assert pe1[0] <= pe0[0] + 2 * (pe0[1] + pe1[1])


def test_monotone_trend_8_12():
    _assert_non_increasing(_trend([8, 12]))


@pytest.mark.slow
def test_monotone_trend_8_12_16():
    _assert_non_increasing(_trend([8, 12, 16]))


def test_seed_length_helps_uniformity():
    n = 12
    with_seed, without = [], []
    for s in range(10):
        with_seed.append(evaluate_exact(_code(n, 0.2, math.ceil(4 * math.sqrt(n)), eps1=0.5, seed=s)).ue)
        without.append(evaluate_exact(_code(n, 0.2, 0, eps1=0.5, seed=s)).ue)
    assert np.mean(with_seed) <= np.mean(without)


# converse bound

def test_converse_deterministic_source():
    p = Pmf.point_mass(2, 0)
    for M in (4, 8, 64):
        assert ue_lower_bound(p, 6, 0, M, M / 2) == pytest.approx(1.0)
    # gamma = 1 makes the tail event p > 1 empty
    assert ue_lower_bound(p, 6, 0, 2, 1) == pytest.approx(-1.0)
    ident = evaluate_exact(IdentityCompressor(p, 6))
    assert ident.ue == pytest.approx(2 * (1 - 1 / 64)) and ident.ue >= 1


def test_converse_vacuous_near_M():
    assert ue_lower_bound(B3, 12, 4, 4096, 4096 * (1 - 1e-9)) <= 0


def test_converse_range():
    with pytest.raises(ValueError):
        ue_lower_bound(B3, 4, 0, 16, 0)
    with pytest.raises(ValueError):
        ue_lower_bound(B3, 4, 0, 16, 16)


def test_converse_identity_n16():
    ident = IdentityCompressor(B3, 16)
    assert ue_lower_bound(B3, 16, 0, 2**16, 2**8) <= evaluate_exact(ident).ue


def _gamma_grid(M):
    return [g for g in np.geomspace(1e-3, M * (1 - 1e-6), 16)]


@pytest.mark.parametrize("label", ["identity-8", "identity-16", "binning-8", "binning-12", "pipeline-10", "pipeline-14"])
def test_converse_below_exact_ue(label):
    kind, n = label.split("-")
    n = int(n)
    if kind == "identity":
        code = IdentityCompressor(B3, n)
    elif kind == "binning":
        code = _code(n, 0.2, math.ceil(4 * math.sqrt(n)) // 2, eps1=0.5, seed=1)
    else:
        code = ExtractorPipeline.build(B3, n, 0.3, AffineExtractor if n == 10 else IdentityExtractor)
    ue = evaluate_exact(code).ue
    for g in _gamma_grid(code.M):
        assert ue_lower_bound(B3, n, code.seed_bits, code.M, g) <= ue + 1e-12


# Berry-Esseen window

def test_window_degenerate_source():
    with pytest.raises(ValueError):
        berry_esseen_window(Pmf.bernoulli(0.5), 50, 2, 1)
    with pytest.raises(ValueError):
        berry_esseen_window(B3, 50, 1, 2)


def test_window_half_line_gaussian():
    w = berry_esseen_window(B3, 40, math.inf, 1e-12)
    assert w.gaussian == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize(
    "n,a,b,value",
    [
        (25, 2, 1, 0.171966282979), (100, 2, 1, 0.141869712368), (400, 2, 1, 0.127233165792),
        (25, 3, 0.5, 0.321293470027), (100, 3, 0.5, 0.287166826411), (400, 3, 0.5, 0.308205117656),
    ],
)
def test_window_exact_values(n, a, b, value):
    w = berry_esseen_window(B3, n, a, b)
    assert w.exact == pytest.approx(oracles.binomial_window(0.3, n, a, b), abs=1e-12)
    assert w.exact == pytest.approx(value, abs=1e-11)
    assert w.holds


@pytest.mark.parametrize("q", [0.05, 0.2, 0.3, 0.45])
@pytest.mark.parametrize("n", [10, 50, 200])
@pytest.mark.parametrize("ab", [(2, 1), (math.inf, 0.5), (1, 0.2)])
def test_window_bound_holds(q, n, ab):
    assert berry_esseen_window(Pmf.bernoulli(q), n, *ab).holds


def test_window_ternary():
    w = berry_esseen_window(Pmf([0.5, 0.3, 0.2]), 30, 2, 0.5)
    assert w.holds


# extractor pipeline

def test_identity_pipeline_is_ts_code():
    pipe = ExtractorPipeline.build(B3, 10, 0.3, IdentityExtractor)
    law = ts_pushforward(pipe.index).probs
    assert np.allclose(pipe.pushforward().probs[: law.size], law)
    x = pipe.index.sequence(5)
    assert extractor_pipeline_encode(x, 0, pipe) == 5


def test_affine_pipeline_roundtrip_all_typical():
    pipe = ExtractorPipeline.build(B3, 10, 0.3, AffineExtractor)
    rng = np.random.default_rng(2)
    for u in rng.integers(0, 1 << pipe.seed_bits, 8):
        for seq in pipe.index.sequences:
            m = extractor_pipeline_encode(seq, int(u), pipe)
            assert np.array_equal(extractor_pipeline_decode(m, int(u), pipe), seq)


def test_affine_pipeline_beats_bare_code():
    pipe = ExtractorPipeline.build(B3, 10, 0.3, AffineExtractor)
    uni = Pmf.uniform(pipe.M)
    ue = variational_distance(pipe.pushforward(), uni)
    bare = variational_distance(pipe.encode_pushforward_bare(), uni)
    assert ue <= bare
    assert ue == pytest.approx(0.0, abs=1e-12)
    assert evaluate_exact(pipe).pe == pytest.approx(oracles.atypical_mass([0.7, 0.3], 10, 0.3), abs=1e-12)


def test_pipeline_width_mismatch():
    index = build_typical_index(B3, 10, 0.3)
    with pytest.raises(ValueError):
        ExtractorPipeline(index, AffineExtractor(5))


def test_pipeline_decode_outside_typical_set():
    pipe = ExtractorPipeline.build(B3, 10, 0.3, IdentityExtractor)
    with pytest.raises(NoCandidateError):
        pipe.decode(pipe.M - 1, 0)


def test_pipeline_mc():
    pipe = ExtractorPipeline.build(B3, 10, 0.3, lambda w: make_extractor("gf-multiply", w))
    rep = evaluate_mc(pipe, None, 3000, 1)
    pe = pipe.exact_pe()
    assert abs(rep.pe - pe) <= 4 * math.sqrt(pe * (1 - pe) / 3000)


def test_min_entropy_target_below_true_min_entropy():
    index = build_typical_index(B3, 10, 0.3)
    from wiretapkit.typical import atypical_probability

    delta = atypical_probability(B3, 10, 0.3)
    hmin = -math.log2(ts_pushforward(index).probs.max())
    assert min_entropy_target(B3, 10, 0.3, delta) <= hmin
