"""Fixed-rate source codec with decoder side information.

The encoder transforms a source block, keeps only the transform bits at a
designed set of high-uncertainty indices, and packs them into a small
self-describing container.  The decoder replays the successive-cancellation
sweep over the receiver's observations with the stored bits forced, which
reconstructs the remaining indices and hence the source block.

Container layout (PLMEM001):

    magic   8 bytes  b"PLMEM001"
    N       u32 LE   block length
    K       u32 LE   number of stored bits
    indices          K LEB128 varints: first index, then gaps-1 between
                     consecutive sorted indices
    payload          the stored bits packed LSB-first, ceil(K/8) bytes
    crc     u32 LE   CRC32 of everything after the magic, excluding itself
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .entropy import wilson_interval
from .oracle import exact_profile
from .process import sample_paths
from .sctrellis import genie_profile_mc, sc_decode
from .transform import polar_encode

MAGIC = b"PLMEM001"


class DecodeFailure(Exception):
    """Raised when a container is malformed or fails its integrity check."""


# ---------------------------------------------------------------------------
# frozen-set design


@dataclass(frozen=True)
class FrozenSet:
    """Stored-index set for one (process, N) design.

    rate is the stored fraction |F|/N (compressed bits per source bit);
    z_sum_bound is the sum of the design profile's Bhattacharyya values over
    the reconstructed indices, an upper bound on the expected block error
    rate of the sweep decoder.
    """

    N: int
    indices: np.ndarray
    process_name: str
    process_fingerprint: str
    profile_method: str
    z_sum_bound: float
    design_rule: str

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.N):
            raise ValueError("frozen indices out of range")
        object.__setattr__(self, "indices", idx)

    @property
    def mask(self):
        m = np.zeros(self.N, dtype=bool)
        m[self.indices] = True
        return m

    @property
    def rate(self):
        return self.indices.size / self.N

    def to_json(self):
        return json.dumps(
            {
                "N": self.N,
                "indices": self.indices.tolist(),
                "process_name": self.process_name,
                "process_fingerprint": self.process_fingerprint,
                "profile_method": self.profile_method,
                "z_sum_bound": self.z_sum_bound,
                "design_rule": self.design_rule,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            N=d["N"],
            indices=np.asarray(d["indices"], dtype=np.int64),
            process_name=d["process_name"],
            process_fingerprint=d["process_fingerprint"],
            profile_method=d["profile_method"],
            z_sum_bound=d["z_sum_bound"],
            design_rule=d["design_rule"],
        )


def design_code(kernel, N, frozen_count=None, z_threshold=None, profile=None,
                samples=2048, seed=0, given_state=None, backend=None,
                exact=False):
    """Choose the stored-index set from an (H, Z) profile.

    Exactly one of frozen_count / z_threshold selects the rule: either the
    `frozen_count` indices of largest estimated entropy (ties -> smaller
    index), or every index whose Bhattacharyya estimate reaches
    `z_threshold`.  The profile defaults to a Monte-Carlo run (or the exact
    oracle when `exact`); pass `profile` to reuse one.
    """
    if (frozen_count is None) == (z_threshold is None):
        raise ValueError("pass exactly one of frozen_count / z_threshold")
    if profile is None:
        if exact:
            profile = exact_profile(kernel, N, given_state=given_state)
        else:
            profile = genie_profile_mc(kernel, N, samples, seed,
                                       given_state=given_state, backend=backend)
    if profile.N != N:
        raise ValueError("profile block length mismatch")
    if frozen_count is not None:
        if not 0 <= frozen_count <= N:
            raise ValueError("frozen_count out of range")
        order = np.lexsort((np.arange(N), -profile.H))
        idx = np.sort(order[:frozen_count])
        rule = f"budget:{frozen_count}"
    else:
        idx = np.flatnonzero(profile.Z >= z_threshold)
        rule = f"threshold:{z_threshold}"
    keep = np.ones(N, dtype=bool)
    keep[idx] = False
    return FrozenSet(
        N=N,
        indices=idx,
        process_name=kernel.name,
        process_fingerprint=kernel.fingerprint(),
        profile_method=profile.method,
        z_sum_bound=float(profile.Z[keep].sum()),
        design_rule=rule,
    )


# ---------------------------------------------------------------------------
# container


def _write_varint(out, value):
    v = int(value)
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def _read_varint(buf, pos):
    shift = 0
    value = 0
    while True:
        if pos >= len(buf):
            raise DecodeFailure("truncated varint")
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise DecodeFailure("varint overflow")


def compress(x, frozen):
    """Pack the stored transform bits of one source block into a container."""
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (frozen.N,):
        raise ValueError(f"source block must have length {frozen.N}")
    u = polar_encode(x)
    bits = u[frozen.indices]
    body = bytearray()
    body += np.uint32(frozen.N).tobytes()
    body += np.uint32(frozen.indices.size).tobytes()
    prev = -1
    for i in frozen.indices:
        _write_varint(body, int(i) - prev - 1)
        prev = int(i)
    body += np.packbits(bits, bitorder="little").tobytes()
    crc = zlib.crc32(bytes(body))
    return MAGIC + bytes(body) + np.uint32(crc).tobytes()


def parse_container(blob):
    """(N, indices, stored bits) from a container; raises DecodeFailure."""
    if len(blob) < len(MAGIC) + 12 or blob[: len(MAGIC)] != MAGIC:
        raise DecodeFailure("bad magic")
    body = blob[len(MAGIC):-4]
    crc = int(np.frombuffer(blob[-4:], dtype=np.uint32)[0])
    if zlib.crc32(body) != crc:
        raise DecodeFailure("integrity check failed")
    N = int(np.frombuffer(body[0:4], dtype=np.uint32)[0])
    K = int(np.frombuffer(body[4:8], dtype=np.uint32)[0])
    if not (0 < N and 0 <= K <= N):
        raise DecodeFailure("inconsistent header")
    pos = 8
    indices = np.empty(K, dtype=np.int64)
    prev = -1
    for j in range(K):
        gap, pos = _read_varint(body, pos)
        prev = prev + 1 + gap
        indices[j] = prev
    if K and indices[-1] >= N:
        raise DecodeFailure("index out of range")
    nbytes = (K + 7) // 8
    if len(body) - pos != nbytes:
        raise DecodeFailure("payload length mismatch")
    bits = np.unpackbits(
        np.frombuffer(body[pos:], dtype=np.uint8), bitorder="little"
    )[:K].astype(np.uint8)
    return N, indices, bits


def decompress(kernel, blob, y=None, initial=None, backend=None,
               expected=None):
    """Reconstruct a source block from a container and the side information.

    `expected` (a FrozenSet) cross-checks the container's index set.
    Reconstruction runs the sweep decoder with the stored bits forced; its
    output is exact whenever every reconstructed index is decided correctly.
    """
    N, indices, bits = parse_container(blob)
    if expected is not None:
        if expected.N != N or not np.array_equal(expected.indices, indices):
            raise DecodeFailure("container does not match the expected design")
    mask = np.zeros(N, dtype=bool)
    mask[indices] = True
    vals = np.zeros(N, dtype=np.int8)
    vals[indices] = bits
    _, xhat, _ = sc_decode(kernel, _obs_block(kernel, y, N), mask, vals,
                           initial=initial, backend=backend)
    return xhat.astype(np.uint8)


def _obs_block(kernel, y, N):
    if y is None:
        if kernel.q != 1:
            raise ValueError("side information required for this process")
        return np.zeros(N, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (N,):
        raise ValueError(f"side information must have length {N}")
    return y


# ---------------------------------------------------------------------------
# end-to-end evaluation


@dataclass(frozen=True)
class CodecReport:
    """Round-trip statistics for a frozen-set design."""

    N: int
    blocks: int
    rate: float
    z_sum_bound: float
    block_errors: int
    bler: float
    bler_wilson: tuple
    bit_error_rate: float
    mean_container_bytes: float
    seed: int = 0

    def summary(self):
        lo, hi = self.bler_wilson
        return (
            f"N={self.N} blocks={self.blocks} rate={self.rate:.6f} "
            f"BLER={self.bler:.4g} (95% [{lo:.4g}, {hi:.4g}]) "
            f"BER={self.bit_error_rate:.4g} "
            f"z-sum bound={self.z_sum_bound:.4g} "
            f"avg bytes={self.mean_container_bytes:.1f}"
        )


def evaluate(kernel, frozen, blocks, seed, initial=None, backend=None):
    """Compress/decompress sampled blocks and tally reconstruction errors."""
    N = frozen.N
    _, X, Y = sample_paths(kernel, N, blocks, seed, initial=initial)
    U = polar_encode(X).astype(np.int8)
    mask = frozen.mask
    vals = np.where(mask[None, :], U, 0).astype(np.int8)
    sizes = np.empty(blocks)
    for b in range(blocks):
        sizes[b] = len(compress(X[b], frozen))
    _, Xhat, _ = sc_decode(kernel, Y, mask, vals, initial=initial,
                           backend=backend)
    bad = (Xhat != X).any(axis=1)
    errs = int(bad.sum())
    lo, hi = wilson_interval(errs, blocks)
    return CodecReport(
        N=N,
        blocks=blocks,
        rate=frozen.rate,
        z_sum_bound=frozen.z_sum_bound,
        block_errors=errs,
        bler=errs / blocks,
        bler_wilson=(lo, hi),
        bit_error_rate=float((Xhat != X).mean()),
        mean_container_bytes=float(sizes.mean()),
        seed=seed,
    )
