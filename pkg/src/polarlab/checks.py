"""Exact finite-N verification of the coupling inequalities.

Everything here works on a pair of consecutive length-N blocks: the size-2N
joint law is enumerated exactly, its synthetic bits are split into the two
half-block transforms (U from the first block, V from the second), and each
inequality is evaluated as a residual that must be >= 0 up to float noise.

Notation used throughout: Q_i = (U_1^{i-1}, Y-left), R_i = (V_1^{i-1},
Y-right); psi0 is the lag-0 state-bridging bound from process.psi_k_bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import LN2, h2
from .oracle import (
    TABLE_CAP,
    _bit_matrix,
    _encode_perm,
    _neg_plog2p_sum,
    _sum_ld,
    enumerate_joint,
    exact_profile,
)
from .process import psi_k_bound

DEFAULT_TOL = 1e-9


def _h2_arr(p):
    p = np.clip(p, 0.0, 1.0)
    out = np.zeros_like(p)
    for v in (p, 1.0 - p):
        t = np.zeros_like(p)
        np.log2(v, out=t, where=v > 0.0)
        out -= v * t
    return out


# ---------------------------------------------------------------------------
# shared dense tables for one (kernel, N) pair


@dataclass
class PairTables:
    """Dense laws for two consecutive blocks of length N."""

    N: int
    q: int
    psi0: float
    p_uv: np.ndarray       # (2^N, 2^N, q^N, q^N): P(u, v, y_left, y_right)
    p_half: np.ndarray     # (2^N, q^N): P(u, y) for one block
    profile_half: object   # exact Profile at N
    profile_pair: object   # exact Profile at 2N
    outcome_law: np.ndarray  # (2^N q^N, 2^N q^N): raw two-block outcome law


def build_pair_tables(kernel, N, max_entries=TABLE_CAP):
    law2 = enumerate_joint(kernel, 2 * N, max_entries=max_entries)
    qn = kernel.q**N
    two = 1 << N

    perm2 = _encode_perm(2 * N)
    p_t = np.empty_like(law2.table)
    p_t[perm2] = law2.table

    bits = _bit_matrix(2 * N)
    weights = (1 << np.arange(N - 1, -1, -1, dtype=np.int64))
    u_idx = ((bits[:, 0::2] ^ bits[:, 1::2]).astype(np.int64) @ weights)
    v_idx = (bits[:, 1::2].astype(np.int64) @ weights)
    p_uv = np.zeros((two, two, qn, qn))
    p_uv[u_idx, v_idx] = p_t.reshape(1 << (2 * N), qn, qn)

    p_half = p_uv.sum(axis=(1, 3))

    outcome_law = (
        law2.table.reshape(two, two, qn, qn)
        .transpose(0, 2, 1, 3)
        .reshape(two * qn, two * qn)
    )

    return PairTables(
        N=N,
        q=kernel.q,
        psi0=psi_k_bound(kernel, 0),
        p_uv=p_uv,
        p_half=p_half,
        profile_half=exact_profile(kernel, N, max_entries=max_entries),
        profile_pair=exact_profile(kernel, 2 * N, max_entries=max_entries),
        outcome_law=outcome_law,
    )


def _reduced(p_uv, N, i):
    """Suffix-summed tensor (A_u, u_i, A_v, v_i, YL, YR) for index i."""
    A = 1 << (i - 1)
    S = 1 << (N - i)
    YL, YR = p_uv.shape[2], p_uv.shape[3]
    t = p_uv.reshape(A, 2, S, A, 2, S, YL, YR).sum(axis=(2, 5))
    return t


def _cond_H(joint, bit_axes):
    """H(bits | everything else) for a dense table."""
    return _neg_plog2p_sum(joint) - _neg_plog2p_sum(joint.sum(axis=bit_axes))


# ---------------------------------------------------------------------------
# individual checks


def supermartingale_check(kernel, N, tables=None, max_entries=TABLE_CAP):
    """Per-index slack of the one-step entropy supermartingale.

    slack[i-1] = 2 H(U_i|Q_i) - [H(T_{2i-1}|...) + H(T_{2i}|...)] over the
    size-2N block; also returns the residual of the exact chain-rule identity
    H(children sum) = H(U_i, V_i | Q_i, R_i).
    """
    t = tables or build_pair_tables(kernel, N, max_entries)
    Hc = t.profile_pair.H
    slack = np.zeros(N)
    child_residual = np.zeros(N)
    for i in range(1, N + 1):
        red = _reduced(t.p_uv, N, i)
        marg_u = red.sum(axis=(2, 3, 5))  # (A_u, u_i, YL)
        h_parent = _cond_H(marg_u, (1,))
        h_joint = _cond_H(red, (1, 3))
        child_sum = Hc[2 * i - 2] + Hc[2 * i - 1]
        slack[i - 1] = 2.0 * h_parent - child_sum
        child_residual[i - 1] = abs(child_sum - h_joint)
    return {"slack": slack, "child_sum_residual": child_residual}


def cross_block_mi_check(kernel, N, tables=None, max_entries=TABLE_CAP):
    """Mutual-information budget between the two half-block transforms.

    term_u[i-1] = I(U_i; V_i, R_i, V_{i+1}^N | Q_i) and its mirror for V;
    each sums over i to at most log2(psi0).  The three reported sub-terms
    are nonnegative and dominated by their parent term.
    """
    t = tables or build_pair_tables(kernel, N, max_entries)
    term_u = np.zeros(N)
    term_v = np.zeros(N)
    mi_u_r = np.zeros(N)
    mi_u_v = np.zeros(N)
    mi_v_q = np.zeros(N)
    two = 1 << N
    YL, YR = t.p_uv.shape[2], t.p_uv.shape[3]
    for i in range(1, N + 1):
        A = 1 << (i - 1)
        S = 1 << (N - i)
        red = _reduced(t.p_uv, N, i)
        # u side
        h_u_q = _cond_H(red.sum(axis=(2, 3, 5)), (1,))
        h_u_qr = _cond_H(red.sum(axis=(3,)), (1,))
        h_u_qrv = _cond_H(red, (1,))
        ufull = t.p_uv.reshape(A, 2, S, two, YL, YR).sum(axis=2)
        h_u_all = _cond_H(ufull, (1,))
        term_u[i - 1] = h_u_q - h_u_all
        mi_u_r[i - 1] = h_u_q - h_u_qr
        mi_u_v[i - 1] = h_u_qr - h_u_qrv
        # v side (mirror)
        h_v_r = _cond_H(red.sum(axis=(0, 1, 4)), (1,))
        h_v_rq = _cond_H(red.sum(axis=(1,)), (2,))
        vfull = t.p_uv.reshape(two, A, 2, S, YL, YR).sum(axis=3)
        h_v_all = _cond_H(vfull, (2,))
        term_v[i - 1] = h_v_r - h_v_all
        mi_v_q[i - 1] = h_v_r - h_v_rq
    log_psi = math.log2(t.psi0)
    return {
        "term_u": term_u,
        "term_v": term_v,
        "sum_u": float(term_u.sum()),
        "sum_v": float(term_v.sum()),
        "log2_psi0": log_psi,
        "mi_u_r": mi_u_r,
        "mi_u_v": mi_u_v,
        "mi_v_q": mi_v_q,
    }


def block_outcomes(N, q):
    """All (x, y) block outcomes in table order: bits (O, N), symbols (O, N)."""
    xb = _bit_matrix(N)
    ints = np.arange(q**N, dtype=np.int64)
    pows = q ** np.arange(N - 1, -1, -1, dtype=np.int64)
    ys = (ints[:, None] // pows[None, :]) % q
    X = np.repeat(xb, q**N, axis=0)
    Y = np.tile(ys, (1 << N, 1))
    return X, Y


def nostuck_check(kernel, N, f, tables=None, max_entries=TABLE_CAP):
    """No-sticking bound for a boolean block functional f.

    With A = f(block 1), B = f(block 2) on consecutive blocks and
    psi_N = psi_k_bound(kernel, N):

        2 P(A=0, B=1) >= P(A=0) (1 - psi_N * P(A=0)).

    f may be a callable f(x_bits, y_syms) -> bool or a precomputed boolean
    vector over the 2^N * q^N block outcomes (table order).
    """
    t = tables or build_pair_tables(kernel, N, max_entries)
    n_out = t.outcome_law.shape[0]
    if callable(f):
        X, Y = block_outcomes(N, t.q)
        fv = np.array(
            [bool(f(tuple(X[o]), tuple(Y[o]))) for o in range(n_out)], dtype=bool
        )
    else:
        fv = np.asarray(f, dtype=bool)
        if fv.shape != (n_out,):
            raise ValueError(f"predicate table must have length {n_out}")
    m1 = t.outcome_law.sum(axis=1)
    p_a0 = _sum_ld(m1[~fv])
    p_ab01 = _sum_ld(t.outcome_law[np.ix_(~fv, fv)])
    psi_n = psi_k_bound(kernel, N)
    residual = 2.0 * p_ab01 - p_a0 * (1.0 - psi_n * p_a0)
    return {"residual": residual, "p_a0": p_a0, "p_ab01": p_ab01, "psi_n": psi_n}


def surrogate_gap(kernel, N, i, tables=None, max_entries=TABLE_CAP):
    """Entropy cost of decoupling the two blocks at index i.

    Replaces p(u_i, v_i | q, r) by the product p(u_i|q) p(v_i|r) and measures
    the change in H(U_i + V_i | Q_i R_i).  The gap is bounded by
    h2(min(sqrt(I ln 2), 1/2)) where I = I(U_i; V_i | Q_i R_i).
    """
    t = tables or build_pair_tables(kernel, N, max_entries)
    red = _reduced(t.p_uv, N, i)  # (A_u, u, A_v, v, YL, YR)
    # condition everything on (A_u, A_v, YL, YR)
    p_qr = red.sum(axis=(1, 3))
    alpha_num = red[:, 0, :, 0] + red[:, 1, :, 1]  # P(u=v, q, r)
    safe = np.where(p_qr > 0.0, p_qr, 1.0)
    alpha = alpha_num / safe

    pu = red.sum(axis=(2, 3, 5))  # (A_u, u, YL)
    pu_m = pu.sum(axis=1)
    pu0 = pu[:, 0, :] / np.where(pu_m > 0.0, pu_m, 1.0)
    pv = red.sum(axis=(0, 1, 4))  # (A_v, v, YR)
    pv_m = pv.sum(axis=1)
    pv0 = pv[:, 0, :] / np.where(pv_m > 0.0, pv_m, 1.0)
    # beta[q, r] = P(u~=v is even) under the product law, axes (A_u, A_v, YL, YR)
    b0 = pu0[:, None, :, None] * pv0[None, :, None, :]
    b1 = (1.0 - pu0)[:, None, :, None] * (1.0 - pv0)[None, :, None, :]
    beta = b0 + b1

    h_true = _sum_ld(p_qr * _h2_arr(alpha))
    h_surr = _sum_ld(p_qr * _h2_arr(beta))
    gap = abs(h_surr - h_true)

    h_u_qr = _cond_H(red.sum(axis=(3,)), (1,))
    h_u_qrv = _cond_H(red, (1,))
    mi = max(h_u_qr - h_u_qrv, 0.0)
    bound = h2(min(math.sqrt(mi * LN2), 0.5))
    return {"gap": gap, "bound": bound, "mi": mi}


def _z_of_bit(table, bit_axis):
    """Z(bit | other axes) = 2 sum sqrt(p0 p1) over a dense table."""
    t0 = np.take(table, 0, axis=bit_axis)
    t1 = np.take(table, 1, axis=bit_axis)
    return 2.0 * _sum_ld(np.sqrt(t0 * t1))


def z_recursion_check(kernel, N, tables=None, max_entries=TABLE_CAP):
    """One-step Bhattacharyya recursion with the decoupled-pair constant.

    Verifies, per index i at size N with children at size 2N and
    psi0 = psi_k_bound(kernel, 0):

      minus child: Z_{2i-1} <= 2 psi0 Z_i     plus child: Z_{2i} <= psi0 Z_i^2

    and the two product-law inequalities they factor through (computed on the
    independent-halves surrogate), plus the bridging step
    Z_true <= psi0 * Z_surrogate.  Returns residuals (>= 0 when satisfied).
    """
    t = tables or build_pair_tables(kernel, N, max_entries)
    Zp = t.profile_half.Z
    Zc = t.profile_pair.Z
    psi0 = t.psi0

    hat = np.einsum("uy,vz->uvyz", t.p_half, t.p_half)

    r_minus = np.zeros(N)
    r_plus = np.zeros(N)
    r_hat_minus = np.zeros(N)
    r_hat_plus = np.zeros(N)
    r_glue_minus = np.zeros(N)
    r_glue_plus = np.zeros(N)
    for i in range(1, N + 1):
        red = _reduced(hat, N, i)  # (A_u, u, A_v, v, YL, YR)
        pw0 = red[:, 0, :, 0] + red[:, 1, :, 1]
        pw1 = red[:, 1, :, 0] + red[:, 0, :, 1]
        z_minus_hat = 2.0 * _sum_ld(np.sqrt(pw0 * pw1))
        z_plus_hat = 2.0 * _sum_ld(
            np.sqrt(red[:, 0, :, 0] * red[:, 1, :, 1])
            + np.sqrt(red[:, 1, :, 0] * red[:, 0, :, 1])
        )
        z_parent = Zp[i - 1]
        r_hat_minus[i - 1] = 2.0 * z_parent - z_minus_hat
        r_hat_plus[i - 1] = z_parent**2 - z_plus_hat
        r_glue_minus[i - 1] = psi0 * z_minus_hat - Zc[2 * i - 2]
        r_glue_plus[i - 1] = psi0 * z_plus_hat - Zc[2 * i - 1]
        r_minus[i - 1] = 2.0 * psi0 * z_parent - Zc[2 * i - 2]
        r_plus[i - 1] = psi0 * z_parent**2 - Zc[2 * i - 1]
    return {
        "minus": r_minus,
        "plus": r_plus,
        "hat_minus": r_hat_minus,
        "hat_plus": r_hat_plus,
        "glue_minus": r_glue_minus,
        "glue_plus": r_glue_plus,
        "psi0": psi0,
    }
