import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from wiretapkit.prob import Pmf, binary_entropy, kl_divergence, shannon_entropy
from wiretapkit.polar import (
    PolarConstruction,
    PolarUcCode,
    build_construction,
    cond_entropy_exact,
    cond_entropy_mc,
    construct_sets,
    construction_from_bytes,
    construction_to_bytes,
    delta_threshold,
    polar_transform,
    polar_uc_decode,
    polar_uc_encode,
)
from wiretapkit.typical import ScaleGuardError

B3 = Pmf.bernoulli(0.3)


def test_transform_n2():
    assert polar_transform([1, 0]).tolist() == [1, 0]
    assert polar_transform([0, 1]).tolist() == [1, 1]
    assert not polar_transform(np.zeros(32, np.uint8)).any()


@pytest.mark.parametrize("N", [4, 8, 32])
def test_transform_matches_generator_matrix(N):
    rng = np.random.default_rng(N)
    x = rng.integers(0, 2, (50, N))
    assert np.array_equal(polar_transform(x), oracles.polar_by_matrix(x))


@pytest.mark.parametrize("N", [2, 8, 64, 1024])
def test_transform_involution(N):
    x = np.random.default_rng(N).integers(0, 2, (10_000, N)).astype(np.uint8)
    assert np.array_equal(polar_transform(polar_transform(x)), x)


def test_transform_rejects_bad_length():
    with pytest.raises(ValueError):
        polar_transform([0, 1, 1])


def test_cond_entropy_uniform_and_point():
    assert np.allclose(cond_entropy_exact(Pmf.bernoulli(0.5), 8), 1.0)
    assert np.allclose(cond_entropy_exact(Pmf.point_mass(2, 0), 8), 0.0)


def test_cond_entropy_n2():
    q = 0.11
    ent = cond_entropy_exact(Pmf.bernoulli(q), 2)
    assert ent[0] == pytest.approx(binary_entropy(2 * q * (1 - q)), abs=1e-13)
    assert ent.sum() == pytest.approx(2 * binary_entropy(q), abs=1e-13)
    assert ent == pytest.approx([0.71344814398940, 0.28638377233966], abs=1e-13)


def test_cond_entropy_n8_against_dictionary_oracle():
    ent = cond_entropy_exact(B3, 8)
    assert ent == pytest.approx(oracles.polar_cond_entropies(0.3, 8), abs=1e-12)
    frozen = [0.99999969018, 0.99905472190, 0.99819940307, 0.92856176498,
              0.99578615796, 0.88985801690, 0.84037756139, 0.39848987746]
    assert ent == pytest.approx(frozen, abs=1e-10)


@pytest.mark.parametrize("q", [0.03, 0.11, 0.3, 0.45])
@pytest.mark.parametrize("N", [2, 4, 8, 16])
def test_chain_rule(q, N):
    ent = cond_entropy_exact(Pmf.bernoulli(q), N)
    assert np.all((ent >= 0) & (ent <= 1))
    assert abs(ent.sum() - N * binary_entropy(q)) <= 1e-9


def test_exact_scale_guard():
    with pytest.raises(ScaleGuardError):
        cond_entropy_exact(B3, 32)


def test_mc_matches_exact_n16():
    exact = cond_entropy_exact(B3, 16)
    mean, se = cond_entropy_mc(B3, 16, 100_000, master_seed=1, return_std=True)
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-12)
    # per-index terms are correlated, so bound the sum by the summed errors
    assert abs(mean.sum() - 16 * binary_entropy(0.3)) <= 3 * se.sum()


def test_mc_uniform_source_exact_one():
    assert np.all(cond_entropy_mc(Pmf.bernoulli(0.5), 64, 500, 0) == 1.0)


def test_mc_deterministic():
    a = cond_entropy_mc(B3, 32, 2000, 4)
    assert np.array_equal(a, cond_entropy_mc(B3, 32, 2000, 4))


def test_sets_extremes():
    v, h = construct_sets(np.ones(8), 8, 0.25)
    assert v.tolist() == h.tolist() == list(range(8))
    v, h = construct_sets(np.zeros(8), 8, 0.25)
    assert v.size == h.size == 0
    with pytest.raises(ValueError):
        construct_sets(np.ones(8), 8, 0.5)


@given(st.lists(st.floats(0, 1), min_size=16, max_size=16), st.floats(0.01, 0.49))
def test_sets_nested(ent, beta):
    v, h = construct_sets(ent, 16, beta)
    assert set(v) <= set(h)
    d = delta_threshold(16, beta)
    assert set(h) == {i for i, e in enumerate(ent) if e > d}


def _code(q, N, beta=0.25, **kw):
    return PolarUcCode(build_construction(Pmf.bernoulli(q), N, beta, **kw))


def test_code_widths():
    code = _code(0.3, 16)
    c = code.construction
    assert code.width == c.v_set.size + c.pad_set.size == c.h_set.size
    assert code.seed_len == len(set(c.h_set) - set(c.v_set))


def test_zero_seed_leaves_raw_bits():
    code = _code(0.3, 16)
    x = np.random.default_rng(0).integers(0, 2, 16).astype(np.uint8)
    a = polar_transform(x)
    msg = polar_uc_encode(x, np.zeros(code.seed_len, np.uint8), code)
    assert np.array_equal(msg[code.v_set.size :], a[code.pad_set])


def test_seed_length_mismatch():
    code = _code(0.3, 16)
    with pytest.raises(ValueError):
        polar_uc_encode(np.zeros(16, np.uint8), np.zeros(code.seed_len + 1, np.uint8), code)


def test_padded_block_uniform_over_seed():
    # enumerate every seed for every input; the padded block must be flat
    code = _code(0.3, 8)
    L = code.seed_len
    assert L >= 1
    rng = np.random.default_rng(1)
    for x in rng.integers(0, 2, (5, 8)).astype(np.uint8):
        blocks = [tuple(polar_uc_encode(x, np.array([(s >> (L - 1 - i)) & 1 for i in range(L)], np.uint8), code)[code.v_set.size :]) for s in range(1 << L)]
        assert len(set(blocks)) == 1 << L


def test_pushforward_against_explicit_seed_enumeration():
    code = _code(0.3, 8)
    law = np.zeros(code.M)
    for xi in range(256):
        x = np.array([(xi >> (7 - i)) & 1 for i in range(8)], np.uint8)
        px = oracles.seq_prob(x.tolist(), [0.7, 0.3])
        for s in range(1 << code.seed_len):
            law[code.encode(x, s)] += px / (1 << code.seed_len)
    assert np.allclose(code.pushforward().probs, law, atol=1e-15)


@pytest.mark.parametrize("N", [8, 16])
@pytest.mark.parametrize("q", [0.11, 0.3])
def test_first_block_kl(N, q):
    code = _code(q, N)
    first = code.first_block_law()
    kl = kl_divergence(first, Pmf.uniform(first.alphabet_size))
    assert kl <= N * code.construction.delta_N


def test_uniform_source_roundtrip():
    code = _code(0.5, 64, method="monte-carlo", samples=200)
    assert code.construction.h_set.size == 64
    x = np.random.default_rng(0).integers(0, 2, (100, 64)).astype(np.uint8)
    s = np.zeros(code.seed_len, np.uint8)
    assert np.array_equal(polar_uc_decode(polar_uc_encode(x, s, code), s, code), x)


def test_deterministic_source_roundtrip():
    for b in (0, 1):
        code = PolarUcCode(build_construction(Pmf.point_mass(2, b), 32, method="monte-carlo", samples=100))
        assert code.width == 0
        out = polar_uc_decode(np.zeros(0, np.uint8), np.zeros(0, np.uint8), code)
        assert np.all(out == b)


def test_exact_pe_matches_sampling():
    code = _code(0.11, 16)
    pe = code.exact_pe()
    rng = np.random.default_rng(3)
    x = (rng.random((20000, 16)) < 0.11).astype(np.uint8)
    s = rng.integers(0, 2, code.seed_len).astype(np.uint8)
    err = np.any(code.decode_bits(code.encode_bits(x, s), s) != x, axis=1).mean()
    assert abs(err - pe) <= 4 * math.sqrt(pe * (1 - pe) / 20000)


def test_cache_roundtrip_and_invalidation(tmp_path):
    c = build_construction(B3, 64, samples=500, master_seed=2, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    again = build_construction(B3, 64, samples=500, master_seed=2, cache_dir=tmp_path)
    assert np.allclose(again.cond_entropies, c.cond_entropies, atol=1e-18)
    assert np.array_equal(again.h_set, c.h_set)
    data = construction_to_bytes(c)
    assert construction_from_bytes(data, B3, 64, 0.25, "monte-carlo", 500, 3) is None
    assert construction_from_bytes(data, Pmf.bernoulli(0.31), 64, 0.25, "monte-carlo", 500, 2) is None
    assert construction_from_bytes(data, B3, 64, 0.2, "monte-carlo", 500, 2) is None
    build_construction(B3, 64, samples=500, master_seed=3, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 2


def test_corrupt_cache_is_recomputed(tmp_path):
    c = build_construction(B3, 16, cache_dir=tmp_path)
    path = next(tmp_path.iterdir())
    path.write_bytes(path.read_bytes()[:-8])
    again = build_construction(B3, 16, cache_dir=tmp_path)
    assert np.allclose(again.cond_entropies, c.cond_entropies)


def test_encode_decode_n_log_n():
    def run(N):
        c = build_construction(Pmf.bernoulli(0.11), N, samples=2000)
        code = PolarUcCode(c)
        rng = np.random.default_rng(0)
        x = (rng.random((200, N)) < 0.11).astype(np.uint8)
        s = np.zeros(code.seed_len, np.uint8)
        best = math.inf
        for _ in range(5):
            t = time.perf_counter()
            code.decode_bits(code.encode_bits(x, s), s)
            best = min(best, time.perf_counter() - t)
        return best

    assert run(4096) / run(1024) <= 5.5


def test_direct_construction_object():
    c = PolarConstruction(8, B3, 0.25, cond_entropy_exact(B3, 8), "exact")
    assert c.delta_N == pytest.approx(2 ** -(8**0.25))
    assert set(c.pad_set) == set(c.h_set) - set(c.v_set)
