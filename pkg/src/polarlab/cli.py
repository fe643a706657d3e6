"""Command-line entry point.

    polarlab <profile|fastpolar|periodic|mixing|check|codec>
             --process <file|preset> [--n N] [--samples S] [--seed k]
             [--epsilon e] [--beta b] [--given-state s] [--exact]
             [--backend compiled|numpy] [--out DIR]

Exit codes: 0 all assertions passed, 2 a check or assertion failed,
1 usage/configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import codec as codec_mod
from . import harness
from .process import entropy_rate_estimate, resolve_process

USAGE_ERROR = 1
CHECK_VIOLATION = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # failed checks, so remap usage problems to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _build_parser():
    p = _Parser(prog="polarlab", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("profile", "entropy/Bhattacharyya profile and index-set fractions"),
        ("fastpolar", "fraction of indices with Z below 2^(-N^beta)"),
        ("periodic", "period-4 counterexample study (requires bb00)"),
        ("mixing", "dependence-bound lag profile"),
        ("check", "exact inequality suite over the preset kernels"),
        ("codec", "design a frozen set and measure round-trip error"),
    ):
        q = sub.add_parser(name, help=doc)
        q.add_argument("--process",
                       default="bb00" if name == "periodic" else "hmm2",
                       help="preset name or JSON process file")
        q.add_argument("--n", type=int, default=256, help="block length")
        q.add_argument("--samples", type=int, default=10_000)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--epsilon", type=float, default=0.1)
        q.add_argument("--beta", type=float, default=0.3)
        q.add_argument("--given-state", default=None,
                       help="condition on the state after the first step")
        q.add_argument("--exact", action="store_true",
                       help="use exact enumeration instead of Monte-Carlo")
        q.add_argument("--backend", choices=("compiled", "numpy"),
                       default=None)
        q.add_argument("--out", default=None, help="output directory")
        if name == "codec":
            q.add_argument("--budget", type=int, default=None,
                           help="stored-index count; default "
                                "ceil(N*(rate estimate + 0.15))")
            q.add_argument("--trials", type=int, default=200)
    return p


def _parse_state(raw):
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        return raw


def _config(args):
    kernel = resolve_process(args.process)
    return harness.ExperimentConfig(
        process=kernel,
        N=args.n,
        samples=args.samples,
        seed=args.seed,
        epsilon=args.epsilon,
        beta=args.beta,
        exact=args.exact,
        given_state=_parse_state(args.given_state),
        backend=args.backend,
        out=args.out,
    )


def _run_codec(args):
    kernel = resolve_process(args.process)
    N = args.n
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")
    budget = args.budget
    rate = None
    if budget is None:
        rate = entropy_rate_estimate(
            kernel, N, max(64, min(args.samples, 512)), args.seed + 1
        )
        budget = min(N, math.ceil(N * (rate.value + 0.15)))
    fs = codec_mod.design_code(
        kernel, N, frozen_count=budget, samples=args.samples,
        seed=args.seed, backend=args.backend, exact=args.exact,
    )
    rep = codec_mod.evaluate(kernel, fs, args.trials, args.seed + 101,
                             backend=args.backend)
    half = 0.5 * (rep.bler_wilson[1] - rep.bler_wilson[0])
    passed = rep.bler <= 0.05 and rep.bler <= rep.z_sum_bound + 3.0 * half
    report = {
        "config": {
            "process": kernel.name, "N": N, "samples": args.samples,
            "seed": args.seed, "trials": args.trials, "budget": budget,
            "rate_estimate": None if rate is None else rate.value,
        },
        "frozen_count": int(fs.indices.size),
        "stored_rate": fs.rate,
        "z_sum_bound": fs.z_sum_bound,
        "bler": rep.bler,
        "bler_wilson": list(rep.bler_wilson),
        "bit_error_rate": rep.bit_error_rate,
        "mean_container_bytes": rep.mean_container_bytes,
        "passed": passed,
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "codec_report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(args.out, "frozen_set.json"), "w") as fh:
            fh.write(fs.to_json())
            fh.write("\n")
    print(rep.summary())
    return report


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # keep usage problems on the documented code
        return exc.code if exc.code is not None else 0
    try:
        if args.command == "codec":
            report = _run_codec(args)
        elif args.command == "check":
            cfg = _config(args)
            report = harness.run_check_suite(cfg)
            print(
                f"{len(report['checks'])} checks, "
                f"{len(report['violations'])} violations"
            )
        else:
            cfg = _config(args)
            if args.command == "profile":
                report = harness.run_polarize(cfg)
                print(json.dumps(report["summary"], indent=2))
            elif args.command == "fastpolar":
                report = harness.run_fastpolar(cfg)
                print(json.dumps(report["summary"], indent=2))
            elif args.command == "periodic":
                report = harness.run_periodic(cfg)
                print(
                    "window deviation: "
                    + ", ".join(
                        f"N={n}: {d:.4f}"
                        for n, d in report["window_deviation_direct"].items()
                    )
                )
            elif args.command == "mixing":
                report = harness.run_mixing(cfg)
                print(
                    f"psi0={report['psi0']:.6g} "
                    f"psi_200={report['psi_final']:.6g} "
                    f"non_mixing={report['non_mixing']}"
                )
            else:  # pragma: no cover - argparse restricts choices
                raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"polarlab: {exc}\n")
        return USAGE_ERROR
    return 0 if report.get("passed", True) else CHECK_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
