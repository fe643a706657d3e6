"""Static operation schedule for successive-cancellation sweeps.

A sweep over a length-N block walks a complete binary tree: depth 0 is the
whole block, depth n = log2(N) holds single time steps, and the node (d, j)
covers times [j * N/2^d, (j+1) * N/2^d).  Decoding index i of the block
transform triggers a fixed pattern of message recomputations and, on even
indices, a cascade of partial-bit pushes toward the leaves.  None of that
control flow depends on data, so the whole sweep is compiled once per n
into a flat integer array that any executor (numpy or compiled) replays.

Ops are rows [opcode, depth, node, aux]:

  LEAF  [0, n, j, 0]    message of leaf j from the observation at time j
  MINUS [1, d, j, 0]    odd local position: marginalize the undecided bit
  PLUS  [2, d, j, f]    even local position: combine with the decided bit
                        stored at flat index f of the depth-d bit row
  ROOT  [3, 0, 0, i-1]  posterior and decision for block index i
  PROP  [4, d, j, k]    pair k of node (d, j) decided: push the pair's
                        (xor, even) bits down to the two children

Storage layout shared by all executors: node (d, j) owns message slot
``(2^d - 1) + j`` (each slot is a (2, m, m) block, one m-by-m state matrix
per candidate bit), and its local bit p (1-based) lives at
``bits[d, j * (N >> d) + p - 1]`` in an (n+1, N) table.  Row n of the bit
table therefore accumulates the time-ordered source block, which is how a
decoder recovers x without running the inverse transform.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

OP_LEAF = 0
OP_MINUS = 1
OP_PLUS = 2
OP_ROOT = 3
OP_PROP = 4


def slot_offset(d, j):
    """Message-slot index of node (d, j)."""
    return (1 << d) - 1 + j


def slot_count(n):
    """Total message slots for a depth-n tree."""
    return (1 << (n + 1)) - 1


@lru_cache(maxsize=None)
def build_schedule(n):
    """Flat (K, 4) int32 op list for one sweep over N = 2^n (n >= 1)."""
    if n < 1:
        raise ValueError("the schedule needs N >= 2")
    N = 1 << n
    ops = []

    def msg(d, j, pos):
        if d == n:
            ops.append((OP_LEAF, d, j, 0))
            return
        k = (pos + 1) // 2
        if pos & 1:
            msg(d + 1, 2 * j, k)
            msg(d + 1, 2 * j + 1, k)
            ops.append((OP_MINUS, d, j, 0))
        else:
            ops.append((OP_PLUS, d, j, j * (N >> d) + pos - 2))

    def prop(d, j, k):
        ops.append((OP_PROP, d, j, k))
        if k % 2 == 0:
            prop(d + 1, 2 * j, k // 2)
            prop(d + 1, 2 * j + 1, k // 2)

    for i in range(1, N + 1):
        msg(0, 0, i)
        ops.append((OP_ROOT, 0, 0, i - 1))
        if i % 2 == 0:
            prop(0, 0, i // 2)
    return np.asarray(ops, dtype=np.int32)


@lru_cache(maxsize=None)
def root_segments(n):
    """Op-range (start, stop) per block index: segment i ends after its props."""
    ops = build_schedule(n)
    is_root = ops[:, 0] == OP_ROOT
    bounds = []
    start = 0
    root_rows = np.flatnonzero(is_root)
    for row in root_rows:
        stop = int(row) + 1
        # trailing propagation ops belong to this index
        while stop < len(ops) and ops[stop, 0] == OP_PROP:
            stop += 1
        bounds.append((start, stop))
        start = stop
    return tuple(bounds)
