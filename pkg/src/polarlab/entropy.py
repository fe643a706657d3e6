"""Scalar binary-entropy utilities and the elementary two-coin bounds.

All logarithms are base 2 throughout the package.
"""

import math

LN2 = math.log(2.0)


def h2(p):
    """Binary entropy of p in bits; h2(0) = h2(1) = 0."""
    if p < 0.0 or p > 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    return -(p * math.log2(p) + q * math.log2(q))


def h2_inv(y, tol=1e-12):
    """Inverse of h2 on [0, 1/2], by bisection to absolute tolerance `tol`.

    Returns the unique p in [0, 1/2] with h2(p) = y.
    """
    if y < 0.0 or y > 1.0:
        raise ValueError(f"entropy out of range: {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h2(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binary_convolve(a, b):
    """P(A + B = 1) for independent bits with P(A=1)=a, P(B=1)=b."""
    return a * (1.0 - b) + b * (1.0 - a)


def xor_gain_bound(alpha, beta):
    """Guaranteed entropy gain of an XOR of independent bits over the mean.

    For independent A ~ Ber(alpha), B ~ Ber(beta),

        h2(alpha * beta) - (h2(alpha) + h2(beta)) / 2  >=  returned value,

    where * is binary convolution.  The bound is
    (2/ln2) * (beta(1-beta)|1-2 alpha| + alpha(1-alpha)|1-2 beta|)^2.
    """
    t = beta * (1.0 - beta) * abs(1.0 - 2.0 * alpha) + alpha * (1.0 - alpha) * abs(
        1.0 - 2.0 * beta
    )
    return (2.0 / LN2) * t * t


def xor_gain_floor(xi):
    """Uniform-gap version of the XOR gain bound.

    Given xi in (0, 1) such that max(H(A), H(B)) >= xi and
    min(H(A), H(B)) <= 1 - xi, every admissible bias pair is at least
    sigma = min(h2_inv(xi), 1/2 - h2_inv(1 - xi)) away from degenerate,
    and the XOR gain is at least (2/ln2) * sigma^4 (1-sigma)^2.

    Returns (sigma, floor).
    """
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi must be in (0,1), got {xi}")
    sigma = min(h2_inv(xi), 0.5 - h2_inv(1.0 - xi))
    floor = (2.0 / LN2) * sigma**4 * (1.0 - sigma) ** 2
    return sigma, floor


def h2_diff_check(alpha, beta):
    """Residual of |h2(beta) - h2(alpha)| <= h2(|beta - alpha|); >= 0 when it holds."""
    return h2(abs(beta - alpha)) - abs(h2(beta) - h2(alpha))


def fano_bound(pe, card=4):
    """Fano bound on H(S | guess) for error probability pe over `card` values."""
    if not 0.0 <= pe <= 1.0:
        raise ValueError(f"error probability out of range: {pe}")
    return h2(pe) + pe * math.log2(card - 1)


def wilson_interval(k, n, z=1.96):
    """Wilson score interval for k successes in n trials: (lo, hi)."""
    if n <= 0:
        raise ValueError("need n > 0")
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)
