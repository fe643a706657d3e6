"""Pure-numpy executors for successive-cancellation sweeps.

Two strategies are used.  When all block-transform bits are known up front
(profile estimation along sampled paths), the whole tree can be evaluated
level by level with every node and sample batched into single array ops.
Sequential decoding, where each decision feeds back into later messages,
replays the static op schedule instead, batched over samples only.
"""

from __future__ import annotations

import numpy as np

from .messages import (
    combine_minus,
    combine_plus,
    leaf_messages,
    posterior_from_root,
    rescale_,
)
from .schedule import (
    OP_LEAF,
    OP_MINUS,
    OP_PLUS,
    OP_PROP,
    OP_ROOT,
    build_schedule,
    slot_count,
    slot_offset,
)

#: free-bit decisions treat posteriors this close to 1/2 as ties (-> 0), so
#: executors whose float summation orders differ stay decision-identical;
#: the compiled kernel hardcodes the same constant.
TIE_TOL = 1e-12


def local_bit_levels(u):
    """Per-depth true local bits for known block-transform bits u (B, N).

    Returns a list of n+1 arrays of shape (B, N); row d concatenates the
    local bit vectors of the 2^d nodes at depth d (row 0 is u itself, row n
    is the time-ordered source block).
    """
    u = np.ascontiguousarray(u, dtype=np.int8)
    B, N = u.shape
    levels = [u]
    L = N
    while L > 1:
        r = levels[-1].reshape(B, -1, L)
        a = r[:, :, 0::2] ^ r[:, :, 1::2]
        b = r[:, :, 1::2]
        levels.append(np.stack([a, b], axis=2).reshape(B, N))
        L >>= 1
    return levels


def genie_posteriors(edge, pi, Y, U):
    """P(U_i = 0 | true prefix, y) for every index and sample.

    edge is the (m, m, 2, q) kernel table, pi the start distribution,
    Y (B, N) the observations and U (B, N) the known transform bits.
    Level-by-level evaluation: every message in the tree is conditioned on
    the true prefix, so depth d+1 fully determines depth d in one batch.
    """
    B, N = Y.shape
    m = edge.shape[0]
    if N == 1:
        msg = leaf_messages(edge, Y[:, 0])
        return posterior_from_root(msg, pi)[:, None]
    levels = local_bit_levels(U)
    n = len(levels) - 1
    cur = leaf_messages(edge, Y)  # (B, N, 2, m, m), leaf j = time j
    rescale_(cur)
    for d in range(n - 1, -1, -1):
        nodes = 1 << d
        L = N >> d
        half = L >> 1
        r = cur.reshape(B, nodes, 2, half, 2, m, m)
        ml, mr = r[:, :, 0], r[:, :, 1]
        tb = levels[d].reshape(B, nodes, L)[:, :, 0::2]
        parent = np.stack(
            [combine_minus(ml, mr), combine_plus(ml, mr, tb)], axis=3
        )  # (B, nodes, half, pos, cand, m, m)
        cur = np.ascontiguousarray(parent.reshape(B, N, 2, m, m))
        rescale_(cur)
    return posterior_from_root(cur, pi)


class ScheduleState:
    """Mutable sweep state for op-schedule execution, batched over samples."""

    def __init__(self, edge, pi, Y):
        self.edge = edge
        self.pi = pi
        self.Y = np.ascontiguousarray(Y, dtype=np.int64)
        self.B, self.N = self.Y.shape
        self.n = self.N.bit_length() - 1
        self.m = edge.shape[0]
        self.msgs = np.zeros((self.B, slot_count(self.n), 2, self.m, self.m))
        self.bits = np.zeros((self.B, self.n + 1, self.N), dtype=np.int8)
        self.p0 = np.zeros((self.B, self.N))

    def run(self, ops, decide):
        """Execute schedule rows; `decide(i, p0) -> (B,) bits` at each root."""
        msgs, bits = self.msgs, self.bits
        N = self.N
        for code, d, j, aux in ops:
            code = int(code)
            d = int(d)
            j = int(j)
            aux = int(aux)
            if code == OP_LEAF:
                blk = leaf_messages(self.edge, self.Y[:, j])
                rescale_(blk)
                msgs[:, slot_offset(d, j)] = blk
            elif code == OP_MINUS:
                out = combine_minus(
                    msgs[:, slot_offset(d + 1, 2 * j)],
                    msgs[:, slot_offset(d + 1, 2 * j + 1)],
                )
                rescale_(out)
                msgs[:, slot_offset(d, j)] = out
            elif code == OP_PLUS:
                t = bits[:, d, aux]
                out = combine_plus(
                    msgs[:, slot_offset(d + 1, 2 * j)],
                    msgs[:, slot_offset(d + 1, 2 * j + 1)],
                    t,
                )
                rescale_(out)
                msgs[:, slot_offset(d, j)] = out
            elif code == OP_ROOT:
                pv = posterior_from_root(msgs[:, 0], self.pi)
                self.p0[:, aux] = pv
                bits[:, 0, aux] = decide(aux, pv)
            else:  # OP_PROP
                L = N >> d
                base = j * L
                k = aux
                t = bits[:, d, base + 2 * k - 2]
                v = bits[:, d, base + 2 * k - 1]
                half = L >> 1
                bits[:, d + 1, 2 * j * half + k - 1] = t ^ v
                bits[:, d + 1, (2 * j + 1) * half + k - 1] = v

    @property
    def uhat(self):
        return self.bits[:, 0, :]

    @property
    def xhat(self):
        return self.bits[:, self.n, :]


def decode_posteriors(edge, pi, Y, frozen_mask, frozen_vals):
    """Sequential decode: frozen bits forced, free bits argmax (ties -> 0).

    Returns (uhat, xhat, p0), each (B, N).
    """
    B, N = Y.shape
    if N == 1:
        msg = leaf_messages(edge, Y[:, 0])
        p0 = posterior_from_root(msg, pi)[:, None]
        u = np.where(
            frozen_mask[0],
            frozen_vals[:, 0],
            (p0[:, 0] < 0.5 - TIE_TOL).astype(np.int8),
        ).astype(np.int8)
        return u[:, None], u[:, None], p0
    state = ScheduleState(edge, pi, Y)
    fm = np.asarray(frozen_mask, dtype=bool)
    fv = np.ascontiguousarray(frozen_vals, dtype=np.int8)

    def decide(i, pv):
        if fm[i]:
            return fv[:, i]
        return (pv < 0.5 - TIE_TOL).astype(np.int8)

    state.run(build_schedule(state.n), decide)
    return state.uhat.copy(), state.xhat.copy(), state.p0
