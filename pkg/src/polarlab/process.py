"""Finite-state binary sources with optional side information.

A process is an edge-emitting chain: each step follows an edge S_{t-1} -> S_t
and emits a pair (X_t, Y_t) on that edge, with X_t binary and Y_t from a finite
side-information alphabet (a singleton alphabet when there is none).  Paths are
started from the stationary law of the state chain.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

_NORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True)
class EdgeKernel:
    """Edge-emitting kernel: edge_prob[s, s', x, y] = P(S'=s', X=x, Y=y | S=s)."""

    name: str
    states: tuple
    obs: tuple
    edge_prob: np.ndarray
    periodic_ok: bool = False

    def __post_init__(self):
        ep = np.ascontiguousarray(np.asarray(self.edge_prob, dtype=np.float64))
        object.__setattr__(self, "edge_prob", ep)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "obs", tuple(self.obs))
        m, q = len(self.states), len(self.obs)
        if ep.shape != (m, m, 2, q):
            raise ValueError(
                f"edge_prob shape {ep.shape} != ({m}, {m}, 2, {q})"
            )
        if np.any(ep < 0.0):
            raise ValueError("edge probabilities must be nonnegative")
        rows = ep.sum(axis=(1, 2, 3))
        if np.max(np.abs(rows - 1.0)) > _NORM_TOL:
            raise ValueError(f"edge rows must sum to 1, got {rows}")
        per = self.period()
        if per is not None and per > 1 and not self.periodic_ok:
            raise ValueError(
                f"state chain has period {per}; pass periodic_ok=True to allow it"
            )
        ep.setflags(write=False)

    # -- small derived views (m is tiny, recompute freely) ------------------

    @property
    def m(self):
        return len(self.states)

    @property
    def q(self):
        return len(self.obs)

    def state_marginal(self):
        """Row-stochastic state transition matrix, edges marginalized."""
        return self.edge_prob.sum(axis=(2, 3))

    def fingerprint(self):
        h = hashlib.sha1(self.edge_prob.tobytes())
        h.update(repr((self.states, self.obs, self.name)).encode())
        return h.hexdigest()

    def is_strongly_connected(self):
        adj = self.state_marginal() > 0.0
        return _strongly_connected(adj)

    def period(self):
        """Period of the state chain, or None if it is not irreducible."""
        adj = self.state_marginal() > 0.0
        if not _strongly_connected(adj):
            return None
        return _graph_period(adj)


def _strongly_connected(adj):
    m = adj.shape[0]

    def reach(a):
        seen = np.zeros(m, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.nonzero(a[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return seen

    return bool(reach(adj).all() and reach(adj.T).all())


def _graph_period(adj):
    m = adj.shape[0]
    level = -np.ones(m, dtype=np.int64)
    level[0] = 0
    order = [0]
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for v in np.nonzero(adj[u])[0]:
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(int(v))
    g = 0
    for u in range(m):
        for v in np.nonzero(adj[u])[0]:
            g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g if g > 0 else 1


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pi, dtype=np.float64)
        object.__setattr__(self, "pi", p)
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("not a probability vector")
        p.setflags(write=False)


@dataclass(frozen=True)
class PsiDiagnostics:
    """State-bridging mixing bounds: psi_bound[j] pairs with k_values[j]."""

    k_values: np.ndarray
    psi_bound: np.ndarray


@dataclass(frozen=True)
class SamplePath:
    s: np.ndarray  # states S_0..S_n
    x: np.ndarray  # bits X_1..X_n
    y: np.ndarray  # side info Y_1..Y_n (indices into kernel.obs)


@dataclass(frozen=True)
class EntropyRateEstimate:
    value: float
    stderr: float
    n: int
    samples: int
    method: str  # "exact" | "monte_carlo"


# ---------------------------------------------------------------------------
# constructors


def make_iid(joint, name="iid"):
    """Memoryless source from a joint table p(x, y).

    `joint` is a (2,) array (no side information) or (2, q) array; entries
    must sum to 1.
    """
    j = np.asarray(joint, dtype=np.float64)
    if j.ndim == 1:
        j = j[:, None]
    if j.ndim != 2 or j.shape[0] != 2:
        raise ValueError("joint must have shape (2,) or (2, q)")
    q = j.shape[1]
    ep = j.reshape(1, 1, 2, q)
    obs = tuple(f"y{i}" for i in range(q)) if q > 1 else ("-",)
    return EdgeKernel(name=name, states=("0",), obs=obs, edge_prob=ep)


def make_hidden_markov(state_trans, emit_one, name="hmm"):
    """Hidden-Markov binary source: X_t ~ Ber(emit_one[S_t]), no side info.

    Emission is attached to the destination state of each edge.
    """
    T = np.asarray(state_trans, dtype=np.float64)
    e = np.asarray(emit_one, dtype=np.float64)
    m = T.shape[0]
    if T.shape != (m, m) or e.shape != (m,):
        raise ValueError("need (m, m) transitions and (m,) emission biases")
    ep = np.zeros((m, m, 2, 1))
    ep[:, :, 0, 0] = T * (1.0 - e)[None, :]
    ep[:, :, 1, 0] = T * e[None, :]
    return EdgeKernel(
        name=name,
        states=tuple(str(i) for i in range(m)),
        obs=("-",),
        edge_prob=ep,
    )


def compose_channel_with_input(channel, input_law, state_labels=None,
                               obs_labels=None, name="composed"):
    """Drive a finite-state channel with a binary input law.

    `channel` is an array W[s, x, s', y] = P(S'=s', Y=y | S=s, X=x) with rows
    (over s', y) summing to 1.  `input_law` is either a float p (i.i.d.
    Ber(p) input, composed state = channel state) or a (2, 2) row-stochastic
    matrix over bit values (first-order Markov input; composed state =
    channel state x previous bit).  The composed kernel emits (X_t, Y_t).
    """
    W = np.asarray(channel, dtype=np.float64)
    if W.ndim != 4 or W.shape[1] != 2 or W.shape[0] != W.shape[2]:
        raise ValueError("channel must be W[s, x, s', y] with square state axes")
    mc, _, _, q = W.shape
    rows = W.sum(axis=(2, 3))
    if np.max(np.abs(rows - 1.0)) > _NORM_TOL:
        raise ValueError("channel rows must sum to 1 per (state, input)")
    slabels = list(state_labels) if state_labels else [f"s{i}" for i in range(mc)]
    olabels = tuple(obs_labels) if obs_labels else tuple(f"y{i}" for i in range(q))

    if np.isscalar(input_law):
        p1 = float(input_law)
        if not 0.0 <= p1 <= 1.0:
            raise ValueError("input bias out of range")
        px = np.array([1.0 - p1, p1])
        # E[s, s', x, y] = px[x] * W[s, x, s', y]
        ep = np.einsum("x,sxty->stxy", px, W)
        return EdgeKernel(name=name, states=tuple(slabels), obs=olabels,
                          edge_prob=ep)

    T = np.asarray(input_law, dtype=np.float64)
    if T.shape != (2, 2) or np.max(np.abs(T.sum(axis=1) - 1.0)) > _NORM_TOL:
        raise ValueError("Markov input law must be a 2x2 row-stochastic matrix")
    m = mc * 2
    ep = np.zeros((m, m, 2, q))
    for s in range(mc):
        for a in range(2):
            for x in range(2):
                for t in range(mc):
                    # destination input-state records the emitted bit
                    ep[s * 2 + a, t * 2 + x, x, :] = T[a, x] * W[s, x, t, :]
    labels = tuple(f"{slabels[s]}|{a}" for s in range(mc) for a in range(2))
    return EdgeKernel(name=name, states=labels, obs=olabels, edge_prob=ep)


def make_gilbert_elliott(p_good=0.01, p_bad=0.2, g2b=0.1, b2g=0.2,
                         input_bias=0.5, name="ge"):
    """Two-state flip channel (good/bad crossover) with i.i.d. input."""
    for v in (p_good, p_bad, g2b, b2g):
        if not 0.0 <= v <= 1.0:
            raise ValueError("parameters must be probabilities")
    T = np.array([[1.0 - g2b, g2b], [b2g, 1.0 - b2g]])
    flip = np.array([p_good, p_bad])
    W = np.zeros((2, 2, 2, 2))  # [s, x, s', y]
    for s in range(2):
        for x in range(2):
            for t in range(2):
                W[s, x, t, x] = T[s, t] * (1.0 - flip[t])
                W[s, x, t, 1 - x] = T[s, t] * flip[t]
    return compose_channel_with_input(
        W, input_bias, state_labels=["G", "B"], obs_labels=("0", "1"), name=name
    )


def make_periodic_bb00(name="bb00"):
    """Deterministic 4-cycle source: fair bits on two phases, zeros on the rest.

    States cycle s -> s+1 mod 4; the bit emitted on the edge into state s' is
    Ber(1/2) for s' in {0, 1} and constantly 0 for s' in {2, 3}.  No side
    information.  The chain is periodic by construction.
    """
    ep = np.zeros((4, 4, 2, 1))
    for s in range(4):
        t = (s + 1) % 4
        if t in (0, 1):
            ep[s, t, 0, 0] = 0.5
            ep[s, t, 1, 0] = 0.5
        else:
            ep[s, t, 0, 0] = 1.0
    return EdgeKernel(
        name=name,
        states=("0", "1", "2", "3"),
        obs=("-",),
        edge_prob=ep,
        periodic_ok=True,
    )


# ---------------------------------------------------------------------------
# stationarity and mixing


def stationary_distribution(kernel):
    """Unique stationary law of the state chain (periodic chains allowed).

    Raises ValueError when the chain has no unique stationary law
    (reducible state graph).
    """
    P = kernel.state_marginal()
    m = P.shape[0]
    A = P.T - np.eye(m)
    # uniqueness <=> rank m-1
    sv = np.linalg.svd(A, compute_uv=False)
    tol = m * np.finfo(float).eps * max(1.0, float(sv[0]))
    if np.sum(sv < max(tol, 1e-10)) != 1:
        raise ValueError(
            f"no unique stationary distribution for kernel {kernel.name!r} "
            "(reducible state chain)"
        )
    B = np.vstack([A, np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(B, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.max(np.abs(pi @ P - pi)) > 1e-9:
        raise ValueError("stationary solve failed to converge")
    return StationaryDistribution(pi=pi)


def psi_k_bound(kernel, lag):
    """State-bridging mixing bound at the given lag.

    Returns max_{s,s'} P^lag(s'|s) / pi(s'), with P^0 = I.  Any pair of
    events separated by `lag` steps satisfies
    Pr(A and B) <= bound * Pr(A) Pr(B).
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    pi = stationary_distribution(kernel).pi
    if np.any(pi <= 0.0):
        raise ValueError("stationary law must be strictly positive")
    P = kernel.state_marginal()
    M = np.linalg.matrix_power(P, lag)
    return float((M / pi[None, :]).max())


def mixing_diagnostics(kernel, max_lag=200):
    """psi bounds for lags 0..max_lag (computed by repeated squaring-free steps)."""
    pi = stationary_distribution(kernel).pi
    P = kernel.state_marginal()
    m = P.shape[0]
    M = np.eye(m)
    ks = np.arange(max_lag + 1, dtype=np.int64)
    vals = np.zeros(max_lag + 1)
    for j in range(max_lag + 1):
        vals[j] = (M / pi[None, :]).max()
        M = M @ P
    return PsiDiagnostics(k_values=ks, psi_bound=vals)


# ---------------------------------------------------------------------------
# sampling

_MASK64 = (1 << 64) - 1


def _sample_rng(master_seed, index):
    """Counter-based per-sample stream: Philox keyed by (seed, sample index)."""
    key = np.array([int(master_seed) & _MASK64, int(index) & _MASK64],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _edge_tables(kernel):
    m, q = kernel.m, kernel.q
    flat = kernel.edge_prob.reshape(m, m * 2 * q)
    cum = np.cumsum(flat, axis=1)
    codes = np.arange(m * 2 * q)
    dst = codes // (2 * q)
    dx = (codes // q) % 2
    dy = codes % q
    return cum, dst.astype(np.int64), dx.astype(np.uint8), dy.astype(np.int64)


def sample_paths(kernel, n, count, seed, initial=None):
    """Sample `count` stationary paths of length n; returns (S, X, Y) arrays.

    S has shape (count, n+1) (including S_0), X and Y (count, n).  Each path
    uses an independent counter-based stream derived from (seed, path index),
    so results do not depend on batching.  `initial` optionally overrides the
    stationary initial law of S_0.
    """
    if n <= 0 or count <= 0:
        raise ValueError("need n >= 1 and count >= 1")
    pi = stationary_distribution(kernel).pi if initial is None else np.asarray(initial, float)
    if abs(pi.sum() - 1.0) > 1e-9 or np.any(pi < 0):
        raise ValueError("initial law must be a probability vector")
    U = np.empty((count, n + 1))
    for b in range(count):
        U[b] = _sample_rng(seed, b).random(n + 1)
    cpi = np.cumsum(pi)
    cum, dst, dx, dy = _edge_tables(kernel)
    K = cum.shape[1]
    S = np.empty((count, n + 1), dtype=np.int64)
    X = np.empty((count, n), dtype=np.uint8)
    Y = np.empty((count, n), dtype=np.int64)
    S[:, 0] = np.minimum(np.searchsorted(cpi, U[:, 0], side="right"), len(cpi) - 1)
    for t in range(n):
        rows = cum[S[:, t]]
        idx = np.minimum((U[:, t + 1 : t + 2] >= rows).sum(axis=1), K - 1)
        S[:, t + 1] = dst[idx]
        X[:, t] = dx[idx]
        Y[:, t] = dy[idx]
    return S, X, Y


def sample_path(kernel, n, seed):
    """One stationary path; see sample_paths for the seeding contract."""
    S, X, Y = sample_paths(kernel, n, 1, seed)
    return SamplePath(s=S[0], x=X[0], y=Y[0])


# ---------------------------------------------------------------------------
# likelihoods


def _obs_indices(kernel, y, n):
    if y is None:
        if kernel.q != 1:
            raise ValueError("side information sequence required for this kernel")
        return np.zeros(n, dtype=np.int64)
    yi = np.asarray(y)
    if yi.dtype.kind in "US" or (yi.dtype == object):
        lut = {lab: i for i, lab in enumerate(kernel.obs)}
        yi = np.array([lut[v] for v in yi], dtype=np.int64)
    else:
        yi = yi.astype(np.int64)
    if yi.shape != (n,):
        raise ValueError("side info length mismatch")
    if np.any(yi < 0) or np.any(yi >= kernel.q):
        raise ValueError("side info symbol out of range")
    return yi


def forward_prob(kernel, x, y=None):
    """log2 P(x, y) and log2 P(y) for one realization; -inf when impossible.

    Uses the scaled forward recursion over states, so long blocks neither
    underflow nor overflow.
    """
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[0]
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must be binary")
    yi = _obs_indices(kernel, y, n)
    pi = stationary_distribution(kernel).pi
    E = np.transpose(kernel.edge_prob, (2, 3, 0, 1))  # [x, y, s, s']
    Ey = E.sum(axis=0)  # [y, s, s']

    def run(select):
        alpha = pi.copy()
        total = 0.0
        for t in range(n):
            alpha = alpha @ select(t)
            c = alpha.sum()
            if c <= 0.0:
                return -np.inf
            total += math.log2(c)
            alpha = alpha / c
        return total

    lp_xy = run(lambda t: E[x[t], yi[t]])
    lp_y = 0.0 if kernel.q == 1 else run(lambda t: Ey[yi[t]])
    return lp_xy, lp_y


def _forward_batch(kernel, X, Y, marginal_x=False):
    """Vectorized log2-likelihood over a batch of paths; returns (B,) array."""
    B, n = X.shape
    pi = stationary_distribution(kernel).pi
    E = np.transpose(kernel.edge_prob, (2, 3, 0, 1)).copy()  # [x, y, s, s']
    if marginal_x:
        Esel = E.sum(axis=0)  # [y, s, s']
    alpha = np.broadcast_to(pi, (B, kernel.m)).copy()
    out = np.zeros(B)
    dead = np.zeros(B, dtype=bool)
    for t in range(n):
        mats = Esel[Y[:, t]] if marginal_x else E[X[:, t], Y[:, t]]
        alpha = np.einsum("bi,bij->bj", alpha, mats)
        c = alpha.sum(axis=1)
        zero = c <= 0.0
        dead |= zero
        c_safe = np.where(zero, 1.0, c)
        out += np.where(zero, 0.0, np.log2(c_safe))
        alpha = alpha / c_safe[:, None]
        alpha[zero] = 0.0
    out[dead] = -np.inf
    return out


def entropy_rate_estimate(kernel, n, samples, seed):
    """Monte-Carlo estimate of (1/n) H(X_1^n | Y_1^n) in bits per symbol.

    Averages -(1/n) log2 p(x|y) over sampled stationary paths.  When every
    sample produces the same value the estimate is exact and the stderr is 0.
    """
    if samples <= 1:
        raise ValueError("need at least 2 samples")
    S, X, Y = sample_paths(kernel, n, samples, seed)
    lp_xy = _forward_batch(kernel, X, Y, marginal_x=False)
    lp_y = np.zeros(samples) if kernel.q == 1 else _forward_batch(
        kernel, X, Y, marginal_x=True
    )
    vals = -(lp_xy - lp_y) / n
    if not np.all(np.isfinite(vals)):
        raise AssertionError("sampled path with zero likelihood")
    value = float(vals.mean())
    if np.ptp(vals) == 0.0:
        return EntropyRateEstimate(value=value, stderr=0.0, n=n,
                                   samples=samples, method="exact")
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    return EntropyRateEstimate(value=value, stderr=stderr, n=n,
                               samples=samples, method="monte_carlo")


# ---------------------------------------------------------------------------
# presets and JSON process files


def get_preset(name):
    """Named kernels: bb00, hmm2, iid:<p>, ge[:<pg>,<pb>,<g2b>,<b2g>]."""
    if name == "bb00":
        return make_periodic_bb00()
    if name == "hmm2":
        return make_hidden_markov(
            [[0.9, 0.1], [0.2, 0.8]], [0.5, 0.0], name="hmm2"
        )
    if name.startswith("iid:"):
        p = float(name.split(":", 1)[1])
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"flip probability out of range in {name!r}")
        joint = np.array([[0.5 * (1 - p), 0.5 * p], [0.5 * p, 0.5 * (1 - p)]])
        return make_iid(joint, name=name)
    if name == "ge":
        return make_gilbert_elliott()
    if name.startswith("ge:"):
        parts = name.split(":", 1)[1].split(",")
        if len(parts) != 4:
            raise ValueError("ge preset needs 4 parameters: pg,pb,g2b,b2g")
        pg, pb, g2b, b2g = (float(v) for v in parts)
        return make_gilbert_elliott(pg, pb, g2b, b2g, name=name)
    raise ValueError(f"unknown preset {name!r}")


def to_payload(kernel):
    """JSON-serializable description of a kernel."""
    edges = []
    ep = kernel.edge_prob
    for s in range(kernel.m):
        for t in range(kernel.m):
            for x in range(2):
                for yy in range(kernel.q):
                    p = float(ep[s, t, x, yy])
                    if p > 0.0:
                        edges.append(
                            {
                                "from": kernel.states[s],
                                "to": kernel.states[t],
                                "x": x,
                                "y": kernel.obs[yy],
                                "p": p,
                            }
                        )
    return {
        "name": kernel.name,
        "states": list(kernel.states),
        "obs": list(kernel.obs),
        "edges": edges,
        "periodic_ok": kernel.periodic_ok,
    }


def from_payload(payload):
    states = [str(s) for s in payload["states"]]
    obs = [str(o) for o in payload["obs"]]
    sidx = {s: i for i, s in enumerate(states)}
    oidx = {o: i for i, o in enumerate(obs)}
    ep = np.zeros((len(states), len(states), 2, len(obs)))
    for e in payload["edges"]:
        ep[sidx[str(e["from"])], sidx[str(e["to"])], int(e["x"]),
           oidx[str(e["y"])]] += float(e["p"])
    return EdgeKernel(
        name=str(payload.get("name", "process")),
        states=tuple(states),
        obs=tuple(obs),
        edge_prob=ep,
        periodic_ok=bool(payload.get("periodic_ok", False)),
    )


def save_process(kernel, path):
    with open(path, "w") as fh:
        json.dump(to_payload(kernel), fh, indent=2, sort_keys=True)


def load_process(path):
    with open(path) as fh:
        return from_payload(json.load(fh))


def resolve_process(arg):
    """CLI helper: preset name or path to a JSON process file."""
    try:
        return get_preset(arg)
    except ValueError:
        pass
    try:
        return load_process(arg)
    except FileNotFoundError:
        raise ValueError(
            f"{arg!r} is neither a known preset nor a readable process file"
        ) from None
