"""Exact small-N laws and synthetic-bit profiles by brute-force enumeration.

These are the reference implementations everything else is tested against:
they push the full joint law p(x_1^N, y_1^N) through the butterfly transform
and read conditional entropies off dense tables.  Feasible while
2^N * q^N stays under the table cap (default 2^24 entries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .process import EdgeKernel, make_periodic_bb00, stationary_distribution
from .transform import polar_encode

TABLE_CAP = 1 << 24


# ---------------------------------------------------------------------------
# dense-table helpers


def _sum_ld(a):
    # accumulate in extended precision; numpy pairwise summation underneath
    return float(np.sum(a, dtype=np.longdouble))


def _neg_plog2p_sum(p):
    terms = np.zeros_like(p)
    np.log2(p, out=terms, where=p > 0.0)
    terms *= p
    return -_sum_ld(terms)


def _bit_matrix(N):
    """(2^N, N) matrix of binary digits, MSB first."""
    ints = np.arange(1 << N, dtype=np.int64)
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    return ((ints[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _encode_perm(N):
    """perm[x_int] = u_int under the butterfly transform, MSB-first packing."""
    bits = _bit_matrix(N)
    u = polar_encode(bits)
    weights = (1 << np.arange(N - 1, -1, -1, dtype=np.int64))
    return (u.astype(np.int64) @ weights).astype(np.int64)


# ---------------------------------------------------------------------------
# joint laws


@dataclass(frozen=True)
class JointLaw:
    """Dense law over (x_1^N, y_1^N): table[x_int, y_int], MSB-first packing."""

    N: int
    q: int
    table: np.ndarray
    kernel_name: str
    given_state: object = None

    def __post_init__(self):
        self.table.setflags(write=False)


def _check_cap(N, q, m, max_entries):
    entries = (1 << N) * q**N
    if entries > max_entries:
        raise ValueError(
            f"exact enumeration needs {entries} table entries "
            f"(2^{N} * {q}^{N}), above the cap of {max_entries}"
        )


def _state_label_index(kernel, given_state):
    if isinstance(given_state, (int, np.integer)) and given_state not in kernel.states:
        idx = int(given_state)
        if not 0 <= idx < kernel.m:
            raise ValueError(f"state index {given_state} out of range")
        return idx
    try:
        return kernel.states.index(given_state)
    except ValueError:
        raise ValueError(f"unknown state {given_state!r}") from None


def _evolve_law(kernel, N, s1_restrict=None):
    """State-resolved table A[x_int, y_int, s] after N steps.

    s1_restrict conditions the first transition to land in the given state
    (unnormalized: resulting mass is P(S_1 = s, x, y)).
    """
    pi = stationary_distribution(kernel).pi
    ep = kernel.edge_prob  # [s, s', x, y]
    m, q = kernel.m, kernel.q
    A = pi.reshape(1, 1, m).astype(np.float64)
    for t in range(N):
        step = ep
        if t == 0 and s1_restrict is not None:
            mask = np.zeros((m, 1, 1, 1))
            mask[s1_restrict] = 1.0
            step = ep * mask.reshape(1, m, 1, 1)
        # A[p, r, s] * ep[s, s', x, y] -> A'[p, x, r, y, s']
        A = np.einsum("prs,stxy->pxryt", A, step)
        A = A.reshape((1 << (t + 1)), q ** (t + 1), m)
    return A


def enumerate_joint(kernel, N, given_state=None, max_entries=TABLE_CAP):
    """Exact joint law of (X_1^N, Y_1^N), optionally conditioned on S_1.

    `given_state` conditions on the state reached after the first transition
    (the state whose emission produced X_1), by exact Bayes re-weighting.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    _check_cap(N, kernel.q, kernel.m, max_entries)
    restrict = None if given_state is None else _state_label_index(kernel, given_state)
    A = _evolve_law(kernel, N, s1_restrict=restrict)
    table = A.sum(axis=2)
    if given_state is not None:
        mass = table.sum()
        if mass <= 0.0:
            raise ValueError(f"state {given_state!r} has zero probability at t=1")
        table = table / mass
    return JointLaw(N=N, q=kernel.q, table=table, kernel_name=kernel.name,
                    given_state=given_state)


def state_resolved_joint(kernel, N, max_entries=TABLE_CAP):
    """Unnormalized tables P(S_1 = s, x, y), shape (m, 2^N, q^N)."""
    _check_cap(N, kernel.q, kernel.m, max_entries)
    out = np.empty((kernel.m, 1 << N, kernel.q**N))
    for s in range(kernel.m):
        out[s] = _evolve_law(kernel, N, s1_restrict=s).sum(axis=2)
    return out


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class Profile:
    """Per-index conditional entropy / Bhattacharyya profile of a block.

    H[i-1] = H(U_i | U_1^{i-1}, Y_1^N) and Z[i-1] the matching Bhattacharyya
    parameter (1-based indices in all public discussion).
    """

    N: int
    H: np.ndarray
    Z: np.ndarray
    method: str  # "exact" | "mc"
    H_stderr: np.ndarray = field(default=None)
    Z_stderr: np.ndarray = field(default=None)
    samples: int = 0

    def __post_init__(self):
        for name in ("H", "Z", "H_stderr", "Z_stderr"):
            v = getattr(self, name)
            if v is None:
                object.__setattr__(self, name, np.zeros(self.N))
            else:
                object.__setattr__(self, name, np.asarray(v, dtype=np.float64))

    def check_relations(self, tol=1e-9):
        """Z^2 <= H <= log2(1+Z) for exact profiles; raises on violation."""
        lhs = self.Z**2 - self.H
        rhs = self.H - np.log2(1.0 + self.Z)
        worst = max(float(lhs.max(initial=-np.inf)), float(rhs.max(initial=-np.inf)))
        if worst > tol:
            raise AssertionError(f"entropy/Bhattacharyya relation violated by {worst}")
        return worst


def _law_to_synthetic(law):
    """Permute the x axis of a law table into synthetic-bit order."""
    perm = _encode_perm(law.N)
    out = np.empty_like(law.table)
    out[perm] = law.table
    return out


def profile_from_table(p_u, N):
    """(H, Z) arrays from a dense synthetic-bit law p_u[u_int, y_int]."""
    Yn = p_u.shape[1]
    H = np.zeros(N)
    Z = np.zeros(N)
    for i in range(1, N + 1):
        t = p_u.reshape(1 << (i - 1), 2, 1 << (N - i), Yn).sum(axis=2)
        joint = _neg_plog2p_sum(t)
        marg = _neg_plog2p_sum(t.sum(axis=1))
        H[i - 1] = joint - marg
        Z[i - 1] = 2.0 * _sum_ld(np.sqrt(t[:, 0, :] * t[:, 1, :]))
    return np.clip(H, 0.0, None), Z


def exact_profile(kernel, N, given_state=None, max_entries=TABLE_CAP):
    """Exact conditional entropy/Bhattacharyya profile at block length N."""
    law = enumerate_joint(kernel, N, given_state=given_state,
                          max_entries=max_entries)
    p_u = _law_to_synthetic(law)
    H, Z = profile_from_table(p_u, N)
    prof = Profile(N=N, H=H, Z=Z, method="exact", samples=0)
    prof.check_relations()
    return prof


def conditional_entropy_rate(kernel, N, max_entries=TABLE_CAP):
    """(1/N) H(X_1^N | Y_1^N), exact."""
    law = enumerate_joint(kernel, N, max_entries=max_entries)
    h_xy = _neg_plog2p_sum(law.table)
    h_y = _neg_plog2p_sum(law.table.sum(axis=0))
    return (h_xy - h_y) / N


def posterior_path(kernel, N, x, y=None, given_state=None):
    """Exact per-index posteriors P(U_i = 0 | u_1^{i-1}, y_1^N) along one path.

    `x` is the realized source block; its transform supplies the conditioning
    prefix at every index.  Returns an (N,) array of probabilities.
    """
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (N,):
        raise ValueError("x must have length N")
    law = enumerate_joint(kernel, N, given_state=given_state)
    p_u = _law_to_synthetic(law)
    if law.q == 1:
        y_int = 0
    else:
        yi = np.asarray(y, dtype=np.int64)
        weights = law.q ** np.arange(N - 1, -1, -1, dtype=np.int64)
        y_int = int(yi @ weights)
    col = p_u[:, y_int]
    u = polar_encode(x)
    out = np.zeros(N)
    pref = 0
    for i in range(1, N + 1):
        block = col.reshape(1 << (i - 1), 2, 1 << (N - i))
        p0 = block[pref, 0, :].sum()
        p1 = block[pref, 1, :].sum()
        tot = p0 + p1
        out[i - 1] = p0 / tot if tot > 0.0 else 0.5
        pref = (pref << 1) | int(u[i - 1])
    return out


# ---------------------------------------------------------------------------
# the period-4 counterexample structure


def periodic_identity_checks(tol=None):
    """Structural identities of the period-4 source at N=8, per initial phase.

    Returns {assertion_name: residual}; every residual is 0 up to float
    rounding when the implementation is correct.
    """
    k = make_periodic_bb00()
    N = 8
    bits = _bit_matrix(N)  # u_int -> (u_1..u_8)

    def b(col):  # 1-based bit column
        return bits[:, col - 1].astype(np.float64)

    res = {}
    laws = {}
    for s1 in range(4):
        law = enumerate_joint(k, N, given_state=s1)
        laws[s1] = _law_to_synthetic(law)[:, 0]

    def prob(s1, event):
        return float(laws[s1] @ event)

    # phase 0: U4 is constant 0; U6 is a fresh fair bit, independent of U1..U5
    res["s1=0:U4=0"] = abs(1.0 - prob(0, (b(4) == 0).astype(float)))
    p = laws[0]
    pref = (
        bits[:, 0].astype(np.int64) << 4
        | bits[:, 1].astype(np.int64) << 3
        | bits[:, 2].astype(np.int64) << 2
        | bits[:, 3].astype(np.int64) << 1
        | bits[:, 4].astype(np.int64)
    )
    joint = np.zeros((32, 2))
    np.add.at(joint, (pref, bits[:, 5]), p)
    h_joint = _neg_plog2p_sum(joint)
    h_pref = _neg_plog2p_sum(joint.sum(axis=1))
    h_u6 = _neg_plog2p_sum(joint.sum(axis=0))
    mutual = h_u6 + h_pref - h_joint
    res["s1=0:U6_fresh"] = max(abs(mutual), abs(h_u6 - 1.0))

    # phase 1: repeats U5=U3 and U6=U4, with (U2,U4) a fresh fair pair
    res["s1=1:U5=U3"] = abs(1.0 - prob(1, (b(5) == b(3)).astype(float)))
    res["s1=1:U6=U4"] = abs(1.0 - prob(1, (b(6) == b(4)).astype(float)))
    p24 = np.zeros((2, 2))
    np.add.at(p24, (bits[:, 1], bits[:, 3]), laws[1])
    res["s1=1:(U2,U4)_uniform"] = float(np.abs(p24 - 0.25).max())

    # phase 2: repeats U4=U2
    res["s1=2:U4=U2"] = abs(1.0 - prob(2, (b(4) == b(2)).astype(float)))

    # phase 3: parity-repeats U5=U1+U3 and U6=U2+U4
    res["s1=3:U5=U1+U3"] = abs(
        1.0 - prob(3, (bits[:, 4] == bits[:, 0] ^ bits[:, 2]).astype(float))
    )
    res["s1=3:U6=U2+U4"] = abs(
        1.0 - prob(3, (bits[:, 5] == bits[:, 1] ^ bits[:, 3]).astype(float))
    )
    return res


def periodic_window_identity(N=8):
    """Exact accounting of the half-bit window via the initial phase.

    For the period-4 source and each window index i in (5N/8, 6N/8], the
    conditional entropy splits as

        H(U_i | U^{i-1}) - 1/2 = H(S_1 | U^{i-1}) - H(S_1 | U^i),

    because H(U_i | U^{i-1}, S_1) = 1/2 on the window.  Returns a dict of
    arrays over the window plus the worst identity residual.
    """
    k = make_periodic_bb00()
    sr = state_resolved_joint(k, N)[:, :, 0]  # (4, 2^N): P(S_1=s, x)
    perm = _encode_perm(N)
    p_su = np.empty_like(sr)
    p_su[:, perm] = sr  # (4, 2^N): P(S_1=s, u)
    window = range(5 * N // 8 + 1, 6 * N // 8 + 1)
    out = {"i": [], "H": [], "dev": [], "state_drop": [], "H_given_state": []}
    worst = 0.0
    for i in window:
        t = p_su.reshape(4, 1 << (i - 1), 2, 1 << (N - i)).sum(axis=3)
        h_joint_all = _neg_plog2p_sum(t.sum(axis=0))
        h_pref_all = _neg_plog2p_sum(t.sum(axis=(0, 2)))
        h_i = h_joint_all - h_pref_all
        # H(S_1 | U^{i-1}) and H(S_1 | U^i)
        h_s_pref = _neg_plog2p_sum(t.sum(axis=2)) - h_pref_all
        h_s_full = _neg_plog2p_sum(t) - h_joint_all
        # H(U_i | U^{i-1}, S_1)
        h_i_given_s = (_neg_plog2p_sum(t) - _neg_plog2p_sum(t.sum(axis=2)))
        dev = h_i - 0.5
        drop = h_s_pref - h_s_full
        worst = max(worst, abs(dev - drop), abs(h_i_given_s - 0.5))
        out["i"].append(i)
        out["H"].append(h_i)
        out["dev"].append(dev)
        out["state_drop"].append(drop)
        out["H_given_state"].append(h_i_given_s)
    out = {kk: np.asarray(v) for kk, v in out.items()}
    out["identity_residual"] = worst
    return out


def state_posterior_entropy(kernel, N, upto, max_entries=TABLE_CAP):
    """Exact H(S_1 | U_1^{upto}) in bits (enumeration; small N only)."""
    sr = state_resolved_joint(kernel, N, max_entries=max_entries)
    sr = sr.reshape(kernel.m, 1 << N, kernel.q**N).sum(axis=2)
    perm = _encode_perm(N)
    p_su = np.empty_like(sr)
    p_su[:, perm] = sr
    t = p_su.reshape(kernel.m, 1 << upto, 1 << (N - upto)).sum(axis=2)
    return _neg_plog2p_sum(t) - _neg_plog2p_sum(t.sum(axis=0))
