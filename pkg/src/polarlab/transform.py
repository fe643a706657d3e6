"""The length-2^n binary butterfly transform and its index bookkeeping.

Convention: for a row vector x of N = 2^n bits, u = polar_encode(x) applies the
bit-reversal permutation followed by the superset-XOR butterfly, so that

    u[j] = XOR of x[rev(i)] over all i whose binary support contains j's

(0-based).  Public index arguments (child_indices) are 1-based.
"""

import numpy as np


def _log2_exact(N):
    n = int(N).bit_length() - 1
    if N <= 0 or (1 << n) != N:
        raise ValueError(f"block length must be a power of two, got {N}")
    return n


def bit_reversal_perm(n):
    """Permutation array of length 2^n reversing the n-bit representation."""
    if n < 0:
        raise ValueError("n must be >= 0")
    N = 1 << n
    perm = np.zeros(N, dtype=np.int64)
    for j in range(N):
        r = 0
        v = j
        for _ in range(n):
            r = (r << 1) | (v & 1)
            v >>= 1
        perm[j] = r
    return perm


def _butterfly(a):
    # in-place superset-XOR along the last axis
    N = a.shape[-1]
    n = _log2_exact(N)
    for k in range(n):
        v = a.reshape(a.shape[:-1] + (N >> (k + 1), 2, 1 << k))
        v[..., 0, :] ^= v[..., 1, :]
    return a


def polar_encode(x):
    """Transform source bits to synthetic bits, O(N log N).

    Accepts a 1-D array of length N = 2^n or a batch (..., N); the transform
    is applied along the last axis.
    """
    a = np.array(x, dtype=np.uint8)
    if np.any(a > 1):
        raise ValueError("input must be binary")
    n = _log2_exact(a.shape[-1])
    a = a[..., bit_reversal_perm(n)]
    return _butterfly(a)


def polar_inverse(u):
    """Inverse of polar_encode (the transform is an involution up to ordering)."""
    a = np.array(u, dtype=np.uint8)
    if np.any(a > 1):
        raise ValueError("input must be binary")
    n = _log2_exact(a.shape[-1])
    a = _butterfly(a)
    return a[..., bit_reversal_perm(n)]


def child_indices(i, N):
    """Children of synthetic index i (1-based) at size N in the size-2N block.

    Index i with branch path b splits into 2i-1 (path b0) and 2i (path b1).
    """
    _log2_exact(N)
    if not 1 <= i <= N:
        raise ValueError(f"index {i} out of range 1..{N}")
    return 2 * i - 1, 2 * i


def branch_path(i, N):
    """Branch path of index i (1-based) at size N: the n-bit string of i-1."""
    n = _log2_exact(N)
    if not 1 <= i <= N:
        raise ValueError(f"index {i} out of range 1..{N}")
    return format(i - 1, f"0{n}b") if n > 0 else ""


def deinterleave(t):
    """Split a size-2N synthetic block into the two size-N halves.

    With t = polar_encode(x) for x of length 2N, returns (u, v) where
    u = polar_encode(first half of x) and v = polar_encode(second half):
    u_i = t_{2i-1} xor t_{2i} and v_i = t_{2i} (1-based).
    """
    a = np.asarray(t, dtype=np.uint8)
    if a.shape[-1] % 2 != 0:
        raise ValueError("need an even-length block")
    even = a[..., 1::2]
    odd = a[..., 0::2]
    return odd ^ even, even.copy()
