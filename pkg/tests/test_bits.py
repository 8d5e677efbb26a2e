import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsity_est.bits import (
    BitMatrix,
    BitVector,
    NoiseBudget,
    SupportSet,
    apply_noise,
    asym_ball_size,
    close_bits,
    is_close,
    midpoint_witness,
    or_measure,
)

from . import oracles


@st.composite
def matrices(draw, max_m=6, max_n=8):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    rows = draw(st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m))
    return rows, n


@st.composite
def matrix_and_support(draw):
    rows, n = draw(matrices())
    sup = draw(st.sets(st.integers(0, n - 1)))
    return rows, n, tuple(sorted(sup))


def test_support_set_validation():
    assert SupportSet.of([3, 1], 5).indices == (1, 3)
    with pytest.raises(ValueError):
        SupportSet((1, 1), 5)
    with pytest.raises(ValueError):
        SupportSet((0, 5), 5)
    with pytest.raises(ValueError):
        SupportSet((2, 1), 5)


@given(st.integers(1, 70).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(0, n - 1)))))
def test_support_mask_roundtrip(args):
    n, idx = args
    s = SupportSet.of(idx, n)
    assert SupportSet.from_mask(s.mask, n) == s
    assert s.weight == len(idx)


def test_bitvector_parse_and_format():
    v = BitVector.parse("01101")
    assert v.support == (1, 2, 4)
    assert str(v) == "01101"
    assert v.weight == 3
    with pytest.raises(ValueError):
        BitVector.parse("0121")


def test_or_of_identity_is_the_support():
    I = BitMatrix.identity(6)
    assert or_measure(I, SupportSet.of([0, 4], 6)).support == (0, 4)


def test_or_measure_dimension_mismatch():
    with pytest.raises(ValueError):
        or_measure(BitMatrix.identity(4), SupportSet.of([0], 5))


def test_empty_support_gives_zero_output():
    M = BitMatrix.ones(3, 4)
    assert or_measure(M, SupportSet.of([], 4)).weight == 0


@given(matrix_and_support())
def test_or_measure_matches_naive(args):
    rows, n, sup = args
    M = BitMatrix.from_lists(rows)
    got = or_measure(M, SupportSet.of(sup, n)).to_list()
    assert tuple(got) == oracles.or_output(rows, sup)


@given(matrices())
def test_text_roundtrip(args):
    rows, _ = args
    M = BitMatrix.from_lists(rows)
    assert BitMatrix.from_text(M.to_text()) == M
    assert M.to_lists() == rows


def test_text_format_header():
    M = BitMatrix.from_lists([[1, 0, 1], [0, 0, 1]])
    assert M.to_text() == "2 3\n101\n001\n"
    with pytest.raises(ValueError):
        BitMatrix.from_text("3 3\n101\n001\n")
    with pytest.raises(ValueError):
        BitMatrix.from_text("1 3\n10\n")


def test_apply_noise_checks_polarity():
    b = BitVector.parse("1100")
    assert str(apply_noise(b, [2], [0])) == "0110"
    with pytest.raises(ValueError):
        apply_noise(b, [0], [])
    with pytest.raises(ValueError):
        apply_noise(b, [], [3])
    with pytest.raises(ValueError):
        apply_noise(b, [4], [])


def test_closeness_is_asymmetric():
    x, y = BitVector.parse("1100"), BitVector.parse("1110")
    assert is_close(x, y, NoiseBudget(1, 0))
    assert not is_close(x, y, NoiseBudget(0, 1))
    assert is_close(y, x, NoiseBudget(0, 1))


@given(st.lists(st.integers(0, 1), min_size=1, max_size=10).flatmap(
    lambda x: st.tuples(st.just(x), st.lists(st.integers(0, 1), min_size=len(x), max_size=len(x)))),
    st.integers(0, 3), st.integers(0, 3))
def test_close_bits_matches_naive(xy, e0, e1):
    x, y = xy
    bx = BitVector.from_list(x).bits
    by = BitVector.from_list(y).bits
    assert close_bits(bx, by, e0, e1) == oracles.close(x, y, e0, e1)


@settings(max_examples=200)
@given(st.integers(1, 10).flatmap(lambda m: st.tuples(
    st.lists(st.integers(0, 1), min_size=m, max_size=m),
    st.lists(st.integers(0, 1), min_size=m, max_size=m))), st.integers(0, 3), st.integers(0, 3))
def test_midpoint_witness_is_close_to_both(xs, e0, e1):
    x1, x2 = (BitVector.from_list(v) for v in xs)
    E = e0 + e1
    budget = NoiseBudget(e0, e1)
    if not close_bits(x1.bits, x2.bits, E, E):
        with pytest.raises(ValueError):
            midpoint_witness(x1, x2, budget)
        return
    y = midpoint_witness(x1, x2, budget)
    assert is_close(x1, y, budget)
    assert is_close(x2, y, budget)


@pytest.mark.parametrize("m", range(0, 7))
def test_asym_ball_matches_enumeration(m):
    for w in range(m + 1):
        for r1 in range(3):
            for r2 in range(3):
                assert asym_ball_size(m, w, r1, r2) == oracles.ball(m, w, r1, r2)


def test_asym_ball_unit_radius():
    assert asym_ball_size(10, 4, 0, 0) == 1
    assert asym_ball_size(10, 4, 1, 1) == 5 * 7
