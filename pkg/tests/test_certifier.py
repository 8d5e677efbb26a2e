import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsity_est.bits import BitMatrix, BitVector, NoiseBudget, SupportSet, or_measure, or_output_bits
from sparsity_est.certifier import (
    CertResult,
    build_verified_scheme,
    certify_noiseless,
    certify_noisy,
    consistent_supports,
    partition_count,
    universal_decode_gt,
    universal_decode_gt_noisy,
    verify_scheme,
)
from sparsity_est.gt_scheme import GtSchemeParams, build_scheme

from . import oracles


@st.composite
def small_designs(draw, max_m=6, max_n=7):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    density = draw(st.sampled_from([0.2, 0.4, 0.6]))
    rows = [[int(draw(st.floats(0, 1)) < density) for _ in range(n)] for _ in range(m)]
    D = draw(st.integers(1, n))
    delta = draw(st.sampled_from([1.0, 1.3, 1.5, 2.0, 3.0]))
    return rows, n, D, delta


def _check_counterexample(res: CertResult, rows, delta):
    v1, v2 = res.counterexample
    assert oracles.or_output(rows, v1.indices) == oracles.or_output(rows, v2.indices)
    assert oracles.ratio_bad(v1.weight, v2.weight, delta)


def test_identity_passes():
    res = certify_noiseless(BitMatrix.identity(6), 3, 1.3)
    assert res.passed and res.counterexample is None and res.mode == "exhaustive"


def test_all_ones_row_fails_with_lightest_and_heaviest():
    res = certify_noiseless(BitMatrix.ones(1, 4), 4, 1.2)
    assert not res.passed
    v1, v2 = res.counterexample
    assert v1.indices == (0, 1, 2, 3) and v2.indices == (0,)


def test_pair_collision():
    # columns 0 and 1 identical: {0} and {0, 1} collide, ratio 2 > 1.44
    M = BitMatrix.from_lists([[1, 1, 0], [0, 0, 1]])
    res = certify_noiseless(M, 2, 1.2)
    assert not res.passed
    assert [s.indices for s in res.counterexample] == [(0, 1), (0,)]
    assert certify_noiseless(M, 2, 1.5).passed


def test_zero_column_is_a_violation():
    M = BitMatrix.from_lists([[1, 0], [1, 0]])
    for mode in ("exhaustive", "sampled"):
        res = certify_noiseless(M, 1, 10.0, mode)
        assert not res.passed
        assert res.counterexample[1].weight == 0


def test_cert_json_roundtrip():
    res = certify_noiseless(BitMatrix.ones(1, 4), 4, 1.2)
    back = CertResult.from_json(res.to_json(), 4)
    assert back == res
    assert set(res.to_json()) == {"passed", "counterexample_v1", "counterexample_v2", "checked", "mode"}


@settings(max_examples=300, deadline=None)
@given(small_designs())
def test_exhaustive_matches_pairwise_oracle(design):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    res = certify_noiseless(M, D, delta)
    assert res.passed == oracles.eq4_holds(rows, n, D, delta)
    if not res.passed:
        _check_counterexample(res, rows, delta)


@settings(max_examples=300, deadline=None)
@given(small_designs())
def test_closure_route_matches_exhaustive(design):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    res = certify_noiseless(M, D, delta, "sampled", samples=10**6)
    # every light support fits in the sample budget, so a pass is a full certificate
    if res.passed:
        assert res.mode == "exhaustive"
    assert res.passed == certify_noiseless(M, D, delta).passed
    if not res.passed:
        _check_counterexample(res, rows, delta)


@settings(max_examples=200, deadline=None)
@given(small_designs(max_n=6), st.integers(0, 2))
def test_noisy_matches_pairwise_oracle(design, E):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    e0 = E // 2
    res = certify_noisy(M, D, delta, NoiseBudget(e0, E - e0))
    assert res.passed == oracles.noisy_eq4_holds(rows, n, D, delta, E)
    if not res.passed:
        v1, v2 = res.counterexample
        assert oracles.close(oracles.or_output(rows, v1.indices), oracles.or_output(rows, v2.indices), E, E)
        assert oracles.ratio_bad(v1.weight, v2.weight, delta)


@settings(max_examples=100, deadline=None)
@given(small_designs())
def test_noisy_with_zero_budget_equals_noiseless(design):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    assert certify_noisy(M, D, delta, NoiseBudget(0, 0)) == certify_noiseless(M, D, delta)


def test_sampled_noisy_finds_planted_violation():
    # one extra row hides item 3 behind item 0 up to a single flip
    M = BitMatrix.from_lists([[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert certify_noisy(M, 2, 1.2, NoiseBudget(0, 1), "exhaustive").passed is False
    res = certify_noisy(M, 2, 1.2, NoiseBudget(0, 1), "sampled", samples=2000)
    assert not res.passed


@settings(max_examples=200, deadline=None)
@given(small_designs(), st.data())
def test_universal_decoder_matches_enumeration(design, data):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    sup = tuple(sorted(data.draw(st.sets(st.integers(0, n - 1), max_size=D))))
    b = or_measure(M, SupportSet(sup, n))
    assert universal_decode_gt(M, b, D) == pytest.approx(oracles.universal_estimate(rows, n, D, b.to_list()))


def test_universal_decoder_rejects_unachievable():
    M = BitMatrix.from_lists([[1, 1], [1, 0]])
    with pytest.raises(ValueError):
        universal_decode_gt(M, BitVector.parse("01"), 2)
    with pytest.raises(ValueError):
        universal_decode_gt(BitMatrix.identity(3), BitVector.parse("111"), 2)


def test_noisy_decoder_on_identity():
    # budget (1, 0): y may have one spurious positive, so x and x minus one item both explain it
    I = BitMatrix.identity(6)
    x = SupportSet.of([0, 2, 4], 6)
    y = or_measure(I, x)
    assert universal_decode_gt_noisy(I, y, 6, NoiseBudget(1, 0)) == pytest.approx(math.sqrt(3 * 2))
    assert universal_decode_gt_noisy(I, y, 6, NoiseBudget(0, 1)) == pytest.approx(math.sqrt(3 * 4))
    assert len(consistent_supports(I, y, 6, NoiseBudget(0, 0))) == 1


@settings(max_examples=100, deadline=None)
@given(small_designs(max_n=6), st.data())
def test_noisy_decoder_matches_enumeration(design, data):
    rows, n, D, delta = design
    M = BitMatrix.from_lists(rows)
    y = data.draw(st.lists(st.integers(0, 1), min_size=len(rows), max_size=len(rows)))
    e0, e1 = data.draw(st.integers(0, 2)), data.draw(st.integers(0, 2))
    sups = consistent_supports(M, BitVector.from_list(y), D, NoiseBudget(e0, e1))
    ws = [len(s) for s in oracles.supports(n, D) if oracles.close(oracles.or_output(rows, s), y, e0, e1)]
    assert sorted(map(len, sups)) == sorted(ws)
    if ws:
        got = universal_decode_gt_noisy(M, BitVector.from_list(y), D, NoiseBudget(e0, e1))
        assert got == pytest.approx(oracles.noisy_universal_estimate(rows, n, D, y, e0, e1))


@settings(max_examples=100, deadline=None)
@given(small_designs())
def test_partition_count_matches_enumeration(design):
    rows, n, D, _ = design
    M = BitMatrix.from_lists(rows)
    assert partition_count(M, D) == len({oracles.or_output(rows, s) for s in oracles.supports(n, D)})


@settings(max_examples=120, deadline=None)
@given(small_designs(max_n=6))
def test_certified_designs_admit_universal_decoding(design):
    rows, n, D, delta = design
    if delta <= 1:
        return
    M = BitMatrix.from_lists(rows)
    ok = certify_noiseless(M, D, delta).passed
    decodes = all(
        oracles.approximates(universal_decode_gt(M, or_measure(M, SupportSet(s, n)), D), len(s), delta)
        for s in oracles.supports(n, D)
    )
    assert ok == decodes


def test_verify_scheme_accepts_good_and_rejects_tiny():
    p = GtSchemeParams.with_defaults(32, 4, 4.0, seed=1)
    assert verify_scheme(build_scheme(p)).passed
    # one row per block cannot separate weights
    bad = GtSchemeParams.with_defaults(32, 4, 2.0, t=1, seed=1)
    v = verify_scheme(build_scheme(bad))
    assert not v.passed and v.failing_support is not None
    assert v.worst_deviation > 2.0


def test_build_verified_scheme_is_deterministic():
    p = GtSchemeParams.with_defaults(32, 4, 4.0, seed=4)
    a = build_verified_scheme(p, samples=2000)
    b = build_verified_scheme(p, samples=2000)
    assert a.scheme.matrix == b.scheme.matrix and a.attempts == b.attempts
    assert a.certificate.passed and a.verification.passed


def test_build_verified_scheme_gives_up():
    p = GtSchemeParams.with_defaults(32, 6, 1.5, t=1, seed=0)
    with pytest.raises(RuntimeError):
        build_verified_scheme(p, samples=500, max_reseeds=3, cert_samples=500)


def test_adversarial_search_counts_patterns():
    from sparsity_est.certifier import adversarial_noise_search

    s = build_scheme(GtSchemeParams.with_defaults(12, 3, 4.0, t=2, e0=1, e1=0, seed=2))
    x = SupportSet.of([1, 5], 12)
    b = or_output_bits(s.matrix, x.mask)
    zeros = s.m - b.bit_count()
    res = adversarial_noise_search(s, x, NoiseBudget(1, 0), effort=10**6)
    assert res.exhaustive and res.evaluated == 1 + zeros
