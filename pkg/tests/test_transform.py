import numpy as np
import pytest

from polarlab.transform import (
    bit_reversal_perm,
    branch_path,
    child_indices,
    deinterleave,
    polar_encode,
    polar_inverse,
)


def _random_bits(rng, shape):
    return rng.integers(0, 2, size=shape).astype(np.int8)


def test_single_butterfly():
    assert np.array_equal(polar_encode(np.array([0, 1], dtype=np.int8)), [1, 1])
    assert np.array_equal(polar_encode(np.array([1, 1], dtype=np.int8)), [0, 1])
    assert np.array_equal(polar_encode(np.array([1, 0], dtype=np.int8)), [1, 0])


def test_involution(rng):
    for N in (2, 4, 8, 64, 256):
        x = _random_bits(rng, N)
        assert np.array_equal(polar_encode(polar_encode(x)), x)
        assert np.array_equal(polar_inverse(polar_encode(x)), x)


def test_linearity(rng):
    x = _random_bits(rng, 32)
    y = _random_bits(rng, 32)
    assert np.array_equal(
        polar_encode(x ^ y), polar_encode(x) ^ polar_encode(y)
    )


def test_batch_matches_per_row(rng):
    X = _random_bits(rng, (5, 16))
    U = polar_encode(X)
    assert U.shape == (5, 16)
    for b in range(5):
        assert np.array_equal(U[b], polar_encode(X[b]))


def test_bit_reversal_perm():
    assert np.array_equal(bit_reversal_perm(3), [0, 4, 2, 6, 1, 5, 3, 7])
    for n in range(1, 7):
        p = bit_reversal_perm(n)
        assert np.array_equal(np.sort(p), np.arange(1 << n))
        assert np.array_equal(p[p], np.arange(1 << n))


def test_deinterleave_recovers_time_halves(rng):
    # the even/odd split of the transform equals the transforms of the two
    # time halves: first half through XOR of the pair, second half directly
    for N in (4, 8, 32):
        x = _random_bits(rng, N)
        u = polar_encode(x)
        a, b = deinterleave(u)
        assert np.array_equal(a, polar_encode(x[: N // 2]))
        assert np.array_equal(b, polar_encode(x[N // 2 :]))


def test_child_indices():
    assert child_indices(1, 4) == (1, 2)
    assert child_indices(3, 4) == (5, 6)
    assert child_indices(4, 4) == (7, 8)
    # every index at size 2N is the child of exactly one parent
    seen = [child_indices(i, 8) for i in range(1, 9)]
    flat = [j for pair in seen for j in pair]
    assert sorted(flat) == list(range(1, 17))


def test_branch_path():
    assert branch_path(1, 8) == "000"
    assert branch_path(8, 8) == "111"
    assert branch_path(6, 8) == "101"
    assert branch_path(1, 2) == "0"
    # paths enumerate all binary strings in index order
    assert [branch_path(i, 4) for i in range(1, 5)] == ["00", "01", "10", "11"]


def test_rejects_bad_lengths():
    with pytest.raises(ValueError):
        polar_encode(np.zeros(3, dtype=np.int8))
    with pytest.raises(ValueError):
        polar_encode(np.zeros(0, dtype=np.int8))
