"""Vectorized state-message primitives shared by the numpy executors.

A message is a (2, m, m) block: for each candidate bit value c, entry
[c, s, s'] is the (rescaled) probability of the node's observations and the
state transit s -> s' given the node's decided prefix and candidate c.
All helpers broadcast over arbitrary leading axes.
"""

from __future__ import annotations

import numpy as np


def leaf_messages(edge, y):
    """Messages for single time steps: [c, s, s'] = edge[s, s', c, y].

    y may be any integer array; the result has shape y.shape + (2, m, m).
    """
    m_ = edge[:, :, :, y]  # (m, m, 2) + y.shape
    return np.ascontiguousarray(np.moveaxis(m_, (0, 1, 2), (-2, -1, -3)))


def combine_minus(ml, mr):
    """Odd-position combine: out[c] = ml[c] @ mr[0] + ml[c^1] @ mr[1]."""
    a0, a1 = ml[..., 0, :, :], ml[..., 1, :, :]
    b0, b1 = mr[..., 0, :, :], mr[..., 1, :, :]
    return np.stack([a0 @ b0 + a1 @ b1, a1 @ b0 + a0 @ b1], axis=-3)


def combine_plus(ml, mr, t):
    """Even-position combine with decided bit t: out[c] = ml[t^c] @ mr[c]."""
    idx = np.asarray(t, dtype=np.int64)[..., None, None, None]
    mt = np.take_along_axis(ml, idx, axis=-3)[..., 0, :, :]
    mtx = np.take_along_axis(ml, 1 - idx, axis=-3)[..., 0, :, :]
    return np.stack([mt @ mr[..., 0, :, :], mtx @ mr[..., 1, :, :]], axis=-3)


def rescale_(msg):
    """In-place power-of-two normalization of each (2, m, m) block.

    Scaling a message by 2^-e multiplies both candidates equally, so
    posteriors are unchanged while the dynamic range stays bounded.
    """
    amax = msg.max(axis=(-3, -2, -1), keepdims=True)
    msg *= np.ldexp(1.0, -np.frexp(amax)[1])


def posterior_from_root(msg, pi):
    """P(bit = 0 | prefix, observations) from a root message.

    Zero-mass blocks (the conditioning event has probability zero) yield 0.5.
    """
    p = np.einsum("...cst,s->...c", msg, pi)
    tot = p.sum(axis=-1)
    safe = np.where(tot > 0.0, tot, 1.0)
    return np.where(tot > 0.0, p[..., 0] / safe, 0.5)
