"""Profile estimation and sequential decoding over the state trellis.

The entry points dispatch between two interchangeable executors: a compiled
per-sample kernel (built from _sckernel.pyx) and a vectorized numpy
fallback.  Results agree to float rounding; select explicitly with the
``backend`` argument or the POLARLAB_BACKEND environment variable
("compiled" or "numpy").
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..oracle import Profile, _state_label_index
from ..process import sample_paths, stationary_distribution
from ..transform import polar_encode
from . import _numpy_backend
from ._numpy_backend import TIE_TOL
from .messages import posterior_from_root
from .schedule import OP_ROOT, build_schedule, root_segments

try:
    from . import _sckernel

    HAVE_COMPILED = True
except ImportError:  # extension not built
    _sckernel = None
    HAVE_COMPILED = False

#: posteriors are floored at this value before taking logs, so one sample
#: contributes at most 52 bits; the floor is far below every tolerance used.
POSTERIOR_FLOOR = 2.0**-52

DEFAULT_CHUNK_BYTES = 256 * 1024 * 1024


def _resolve_backend(backend=None):
    be = backend or os.environ.get("POLARLAB_BACKEND")
    if be is None:
        return "compiled" if HAVE_COMPILED else "numpy"
    be = str(be).lower()
    if be not in ("compiled", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if be == "compiled" and not HAVE_COMPILED:
        raise RuntimeError(
            "compiled backend unavailable; build the extension or pick numpy"
        )
    return be


def active_backend():
    """Name of the backend the next call will use."""
    return _resolve_backend(None)


@dataclass(frozen=True)
class TrellisKernel:
    """Prepared arrays for the sweep executors."""

    edge: np.ndarray  # (m, m, 2, q), float64, writable C-order copy
    pi: np.ndarray  # start distribution over states
    m: int
    q: int


def make_trellis(kernel, initial=None):
    """Bundle a process kernel and start distribution for the executors."""
    edge = np.array(kernel.edge_prob, dtype=np.float64, order="C")
    if initial is None:
        pi = stationary_distribution(kernel).pi.copy()
    else:
        pi = np.array(initial, dtype=np.float64).reshape(kernel.m)
        if np.any(pi < 0.0) or not math.isclose(pi.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("initial distribution must be a probability vector")
        pi = pi / pi.sum()
    return TrellisKernel(edge=edge, pi=pi, m=kernel.m, q=kernel.q)


def state_conditioned_start(kernel, given_state):
    """Start distribution realizing exact conditioning on S_1 = given state.

    Returns P(S_0 | S_1 = s).  Sampling from it only reproduces the
    conditional path law when the first transition then lands in s with
    probability one, so kernels with a non-deterministic reachable first
    step are rejected.
    """
    s1 = _state_label_index(kernel, given_state)
    pi = stationary_distribution(kernel).pi
    T = kernel.state_marginal()
    w = pi * T[:, s1]
    mass = w.sum()
    if mass <= 0.0:
        raise ValueError(f"state {given_state!r} has zero probability at t=1")
    w = w / mass
    landing = float(w @ T[:, s1])
    if abs(landing - 1.0) > 1e-12:
        raise ValueError(
            "state-conditioned sampling needs a deterministic first "
            f"transition; P(S_1 = {given_state!r} | start) = {landing:.6f}"
        )
    return w


def _check_block(N):
    if N < 1 or N & (N - 1):
        raise ValueError(f"block length must be a power of two, got {N}")
    return N.bit_length() - 1


def _chunk_ranges(total, size):
    for lo in range(0, total, size):
        yield lo, min(lo + size, total)


def _genie_chunk(N, m, chunk_bytes):
    per_sample = max(N * 2 * m * m * 8 * 3, 1)
    return max(1, int(chunk_bytes) // per_sample)


def _genie_dispatch(tk, Y, U, backend, chunk_bytes=DEFAULT_CHUNK_BYTES):
    """Posterior of bit 0 at every index, true-prefix conditioning."""
    B, N = Y.shape
    be = _resolve_backend(backend)
    if be == "compiled" and N > 1:
        n = _check_block(N)
        p0 = np.empty((B, N))
        scratch_u = np.empty((B, N), dtype=np.int8)
        scratch_x = np.empty((B, N), dtype=np.int8)
        _sckernel.run_sweeps(
            build_schedule(n),
            tk.edge,
            np.ascontiguousarray(Y, dtype=np.int64),
            tk.pi,
            0,
            np.ascontiguousarray(U, dtype=np.int8),
            np.zeros(N, dtype=np.uint8),
            np.zeros((1, N), dtype=np.int8),
            p0,
            scratch_u,
            scratch_x,
        )
        return p0
    p0 = np.empty((B, N))
    for lo, hi in _chunk_ranges(B, _genie_chunk(N, tk.m, chunk_bytes)):
        p0[lo:hi] = _numpy_backend.genie_posteriors(
            tk.edge, tk.pi, Y[lo:hi], U[lo:hi]
        )
    return p0


def genie_profile_mc(kernel, N, samples, seed, given_state=None, initial=None,
                     backend=None, chunk_bytes=DEFAULT_CHUNK_BYTES):
    """Monte-Carlo (H, Z) profile along sampled paths with known bits.

    Paths are sampled from the stationary process (or from `initial`);
    posteriors are computed with the true transform bits as conditioning
    prefix, so -log2 posterior and 2*sqrt(p0*p1) are unbiased per-index
    estimators of the conditional entropy and Bhattacharyya profiles.
    `given_state` conditions both sampling and posterior prior on the state
    reached after the first transition.
    """
    _check_block(N)
    if samples < 2:
        raise ValueError("need at least 2 samples for standard errors")
    if given_state is not None:
        if initial is not None:
            raise ValueError("pass either given_state or initial, not both")
        initial = state_conditioned_start(kernel, given_state)
    tk = make_trellis(kernel, initial)
    _, X, Y = sample_paths(kernel, N, samples, seed, initial=initial)
    U = polar_encode(X).astype(np.int8)
    p0 = _genie_dispatch(tk, Y, U, backend, chunk_bytes)
    p_true = np.where(U == 0, p0, 1.0 - p0)
    hs = -np.log2(np.maximum(p_true, POSTERIOR_FLOOR))
    zs = 2.0 * np.sqrt(p0 * (1.0 - p0))
    root_b = math.sqrt(samples)
    return Profile(
        N=N,
        H=hs.mean(axis=0),
        Z=zs.mean(axis=0),
        method="mc",
        H_stderr=hs.std(axis=0, ddof=1) / root_b,
        Z_stderr=zs.std(axis=0, ddof=1) / root_b,
        samples=samples,
    )


def genie_posterior_batch(kernel, Y, U, given_state=None, initial=None,
                          backend=None, chunk_bytes=DEFAULT_CHUNK_BYTES):
    """P(U_i = 0 | U_1^{i-1}, y) for supplied paths, shape (B, N).

    Like genie_profile_mc but on caller-provided blocks: Y (B, N) observation
    indices, U (B, N) transform bits.  Useful for re-scoring the same paths
    under several initial-state hypotheses.
    """
    Y = np.ascontiguousarray(np.atleast_2d(np.asarray(Y, dtype=np.int64)))
    U = np.ascontiguousarray(np.atleast_2d(np.asarray(U, dtype=np.int8)))
    if Y.shape != U.shape:
        raise ValueError("observation and bit blocks must have equal shape")
    _check_block(Y.shape[1])
    if given_state is not None:
        if initial is not None:
            raise ValueError("pass either given_state or initial, not both")
        initial = state_conditioned_start(kernel, given_state)
    tk = make_trellis(kernel, initial)
    return _genie_dispatch(tk, Y, U, backend, chunk_bytes)


def _as_obs(kernel, y, N):
    if y is None:
        if kernel.q != 1:
            raise ValueError("observations required when the process emits them")
        return np.zeros(N, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if y.shape[-1] != N:
        raise ValueError(f"observation block must have length {N}")
    return y


def sc_posteriors(kernel, x, y=None, given_state=None, initial=None,
                  backend=None):
    """Per-index posteriors P(U_i = 0 | U_1^{i-1}, y) along one known path."""
    x = np.asarray(x, dtype=np.uint8)
    N = x.shape[0]
    _check_block(N)
    if given_state is not None:
        if initial is not None:
            raise ValueError("pass either given_state or initial, not both")
        initial = state_conditioned_start(kernel, given_state)
    tk = make_trellis(kernel, initial)
    Y = _as_obs(kernel, y, N).reshape(1, N)
    U = polar_encode(x).reshape(1, N)
    return _genie_dispatch(tk, Y, U, backend)[0]


def sc_decode(kernel, y, frozen_mask, frozen_values, initial=None,
              backend=None):
    """Sequential decode with frozen bits forced; ties resolve to 0.

    y may be one block (N,) or a batch (B, N); frozen_values likewise.
    Returns (uhat, xhat, p0) matching the input batch shape.
    """
    y = np.asarray(y, dtype=np.int64)
    single = y.ndim == 1
    Y = np.ascontiguousarray(np.atleast_2d(y))
    B, N = Y.shape
    _check_block(N)
    fm = np.asarray(frozen_mask, dtype=bool).reshape(N)
    fv = np.asarray(frozen_values, dtype=np.int8)
    # np.array (not ascontiguousarray): broadcast views are read-only even
    # when already contiguous, and the compiled kernel needs a writable view
    fv = np.array(np.broadcast_to(np.atleast_2d(fv), (B, N)), dtype=np.int8,
                  order="C")
    tk = make_trellis(kernel, initial)
    be = _resolve_backend(backend)
    if be == "compiled" and N > 1:
        n = _check_block(N)
        p0 = np.empty((B, N))
        uhat = np.empty((B, N), dtype=np.int8)
        xhat = np.empty((B, N), dtype=np.int8)
        _sckernel.run_sweeps(
            build_schedule(n),
            tk.edge,
            Y,
            tk.pi,
            1,
            np.zeros((1, N), dtype=np.int8),
            fm.astype(np.uint8),
            fv,
            p0,
            uhat,
            xhat,
        )
    else:
        uhat, xhat, p0 = _numpy_backend.decode_posteriors(tk.edge, tk.pi, Y, fm, fv)
    if single:
        return uhat[0], xhat[0], p0[0]
    return uhat, xhat, p0


class SCEngine:
    """Stepwise sequential decoder over one observation block.

    Presents the next undecided index's posterior, accepts a decision (or
    takes the argmax), and supports rewinding to an earlier index.  Rewind
    resets the sweep and replays the kept decisions, trading speed for a
    state representation that cannot go stale.  Runs on the numpy executor;
    block length must be at least 2.
    """

    def __init__(self, kernel, y=None, N=None, initial=None):
        if y is None and N is None:
            raise ValueError("give observations or a block length")
        if y is not None:
            y = np.asarray(y, dtype=np.int64).reshape(-1)
            N = y.shape[0]
        n = _check_block(N)
        if n < 1:
            raise ValueError("SCEngine needs a block of at least 2")
        self._tk = make_trellis(kernel, initial)
        self._Y = _as_obs(kernel, y, N).reshape(1, N)
        self._n = n
        self.N = N
        self._ops = build_schedule(n)
        self._segments = root_segments(n)
        self._decisions = []
        self._reset()

    def _reset(self):
        self._state = _numpy_backend.ScheduleState(
            self._tk.edge, self._tk.pi, self._Y
        )
        self._pending = None

    @property
    def position(self):
        """Number of decided indices (0-based index of the next one)."""
        return len(self._decisions)

    def posterior(self):
        """(p0, p1) for the next undecided index."""
        i = self.position
        if i >= self.N:
            raise IndexError("all indices decided")
        if self._pending is None:
            a, b = self._segments[i]
            seg = self._ops[a:b]
            root_row = a + int(np.flatnonzero(seg[:, 0] == OP_ROOT)[0])
            self._state.run(self._ops[a:root_row], None)
            pv = float(posterior_from_root(self._state.msgs[:, 0], self._tk.pi)[0])
            self._pending = (root_row, b, pv)
        pv = self._pending[2]
        return pv, 1.0 - pv

    def decide(self, bit=None):
        """Fix the next index (argmax when bit is None) and advance."""
        p0, _ = self.posterior()
        root_row, stop, _ = self._pending
        i = self.position
        if bit is None:
            bit = 0 if p0 >= 0.5 - TIE_TOL else 1
        bit = int(bit)
        self._state.p0[0, i] = p0
        self._state.bits[0, 0, i] = bit
        self._state.run(self._ops[root_row + 1:stop], None)
        self._decisions.append(bit)
        self._pending = None
        return bit

    def rewind(self, index):
        """Forget decisions from 0-based `index` on and replay the rest."""
        if not 0 <= index <= len(self._decisions):
            raise IndexError("rewind target out of range")
        keep = self._decisions[:index]
        self._decisions = []
        self._reset()
        for b in keep:
            self.decide(b)

    @property
    def decisions(self):
        return list(self._decisions)

    def posteriors(self):
        """Posterior of 0 at every decided index so far."""
        return self._state.p0[0, : self.position].copy()

    def source_block(self):
        """Time-ordered source bits implied by a fully decided sweep."""
        if self.position < self.N:
            raise RuntimeError("decide all indices first")
        return self._state.xhat[0].copy()
