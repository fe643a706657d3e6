"""Compare the compiled and numpy sweep backends on the Monte-Carlo workload.

Usage:  python benchmarks/bench_backends.py [--quick]

Times genie-aided profile estimation (the dominant cost of every large-N
experiment) for both backends over a grid of block lengths, plus a
state-count sweep showing the per-combine cost growing with the cube of the
state count.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from polarlab.process import get_preset, make_hidden_markov
from polarlab.sctrellis import HAVE_COMPILED, genie_profile_mc


def time_profile(kernel, N, samples, backend, repeat=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        genie_profile_mc(kernel, N, samples, seed=0, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def chain_with_states(m, seed=0):
    """Aperiodic m-state chain with half the states emitting fair bits."""
    rng = np.random.default_rng(seed)
    trans = rng.uniform(0.1, 1.0, size=(m, m))
    trans /= trans.sum(axis=1, keepdims=True)
    emit = [0.5 if s < (m + 1) // 2 else 0.0 for s in range(m)]
    return make_hidden_markov(trans, emit, name=f"chain{m}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true",
                    help="smaller sizes and sample counts")
    args = ap.parse_args()

    backends = ["numpy"] + (["compiled"] if HAVE_COMPILED else [])
    if not HAVE_COMPILED:
        print("compiled extension not importable; timing numpy only")

    sizes = [(256, 512), (1024, 512), (4096, 128)]
    if args.quick:
        sizes = [(256, 128), (1024, 64)]

    k = get_preset("bb00")
    print(f"\nblock-length sweep on {k.name} (m={k.m}):")
    print(f"{'N':>6} {'samples':>8} " + " ".join(f"{b:>10}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for N, samples in sizes:
        row = [time_profile(k, N, samples, b) for b in backends]
        line = f"{N:>6} {samples:>8} " + " ".join(f"{t:>9.2f}s" for t in row)
        if len(row) == 2:
            line += f"   {row[0] / row[1]:>6.1f}x"
        print(line)

    ms = [1, 2, 4, 8]
    N, samples = (256, 64) if args.quick else (512, 128)
    print(f"\nstate-count sweep at N={N}, {samples} samples:")
    for b in backends:
        ts = [time_profile(chain_with_states(m), N, samples, b) for m in ms]
        # subtract the m=1 time as the dispatch baseline, then fit the slope
        net = [t - ts[0] for t in ts[1:]]
        if min(net) > 0:
            slope = np.polyfit(np.log2(ms[1:]), np.log2(net), 1)[0]
            note = f"log-log slope (baseline-corrected) = {slope:.2f}"
        else:
            note = "too fast to resolve the baseline"
        print(f"  {b:>8}: " + " ".join(
            f"m={m}:{t:.3f}s" for m, t in zip(ms, ts)) + f"   {note}")


if __name__ == "__main__":
    main()
