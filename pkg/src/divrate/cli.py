"""Command line entry point: ``divrate {estimate,bench,remez,construct}``."""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import approx, bench, distributions as dist
from .estimators import METHODS, EstimatorConfig, aplugin_kl, opt_kl, plugin_kl, with_clipping


def _seed_default():
    raw = os.environ.get("DIVRATE_SEED")
    if raw is None or not raw.strip():
        return 0
    return int(raw.strip())


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _load_config(path):
    return EstimatorConfig.from_file(path) if path else EstimatorConfig()


def cmd_estimate(args, out):
    M = dist.read_histogram(args.hist_p)
    N = dist.read_histogram(args.hist_q)
    k = args.k if args.k is not None else M.alphabet_size
    if M.alphabet_size != N.alphabet_size:
        raise dist.InvalidParameterError("histogram files have different lengths")
    if k < M.alphabet_size:
        raise dist.InvalidParameterError(f"--k {k} is smaller than the histogram length {M.alphabet_size}")
    if k > M.alphabet_size:
        # unlisted symbols were never observed
        pad = np.zeros(k - M.alphabet_size, dtype=np.int64)
        M = dist.SampleHistogram(np.concatenate((M.counts, pad)))
        N = dist.SampleHistogram(np.concatenate((N.counts, pad)))
    config = _load_config(args.config)
    if args.f is not None:
        config = with_clipping(config, args.f)
    tallies = ["", "", "", ""]
    if args.method == "plugin":
        value = plugin_kl(M, N)
    elif args.method == "aplugin":
        value = aplugin_kl(M, N, config)
    else:
        est = opt_kl(M, N, config)
        value = est.value
        tallies = [est.poly_branch_p, est.plugin_branch_p, est.poly_branch_q, est.plugin_branch_q]
    shown = "inf" if math.isinf(value) else format(value, ".17g")
    out.write(",".join([args.method, shown] + [str(t) for t in tallies]) + "\n")
    return 0


def cmd_bench(args, out):
    custom = None
    if args.family == "custom":
        if not (args.p_file and args.q_file):
            raise dist.InvalidParameterError("custom family needs --p-file and --q-file")
        custom = (dist.read_distribution(args.p_file), dist.read_distribution(args.q_file))
    if args.grid:
        grid = args.grid
    elif args.sweep == "vary_k":
        grid = [1000, 3000, 10_000]
    else:
        grid = [1000, 10_000, 100_000]
    spec = bench.ExperimentSpec(
        family=args.family, sweep=args.sweep, k=args.k, f=args.f, alpha_p=args.alpha_p,
        alpha_q=args.alpha_q, grid=tuple(grid), rho=args.rho, trials=args.trials,
        methods=tuple(args.methods.split(",")), seed=args.seed, config=_load_config(args.config),
        custom_pair=custom, budget=args.budget, timing=not args.no_timing)
    rows = bench.run_experiment(spec)
    if args.out:
        bench.write_csv(rows, args.out)
    else:
        out.write(bench.format_csv(rows))
    return 0


def cmd_remez(args, out):
    base = approx.remez_xlogx(args.degree)
    if args.interval is None:
        coeffs, err = base.coeffs, base.sup_error
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", approx.DomainWarning)
            poly = approx.rescale_to_interval(base, args.interval)
        coeffs, err = poly.coeffs, poly.base_error
    out.write("j,a_j\n")
    for j, a in enumerate(coeffs):
        out.write(f"{j},{float(a):.17g}\n")
    out.write(f"sup_error,{err:.17g}\n")
    return 0


def _constructed(args):
    fam = args.family
    if fam == "uniform":
        return {"p": dist.make_uniform(args.k)}
    if fam == "zipf":
        return {"p": dist.make_zipf(args.k, args.alpha)}
    if fam == "zipf_pair":
        return {"p": dist.make_zipf(args.k, args.alpha), "q": dist.make_zipf(args.k, args.alpha_q)}
    if fam == "worst_case_I":
        pr = dist.make_worst_case_pair(args.k, args.f)
    elif fam == "bias_I":
        pr = dist.make_worst_case_pair_bias_I(args.k, args.f)
    elif fam == "bias_II":
        pr = dist.make_worst_case_pair_bias_II(args.k, args.n, args.f)
    elif fam in ("twopoint_m", "twopoint_n", "inconsistency"):
        if fam == "twopoint_m":
            a, b = dist.make_twopoint_variance_m(args.k, args.f, args.m)
        elif fam == "twopoint_n":
            a, b = dist.make_twopoint_variance_n(args.k, args.f, args.n)
        else:
            a, b = dist.make_inconsistency_pair(args.s)
        return {"1_p": a.p, "1_q": a.q, "2_p": b.p, "2_q": b.q}
    else:  # pragma: no cover - argparse restricts choices
        raise dist.InvalidParameterError(f"unknown family {fam!r}")
    return {"p": pr.p, "q": pr.q}


def cmd_construct(args, out):
    parts = _constructed(args)
    for suffix, d in parts.items():
        path = Path(f"{args.out}_{suffix}.txt")
        dist.write_distribution(d, path, comment=f"{args.family} k={d.k}")
        out.write(f"{path}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="divrate", description="KL divergence estimation on large alphabets")
    sub = parser.add_subparsers(dest="command", metavar="{estimate,bench,remez,construct}")
    sub.required = True

    p = sub.add_parser("estimate", help="estimate D(P||Q) from two histogram files")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--hist-p", required=True)
    p.add_argument("--hist-q", required=True)
    p.add_argument("--k", type=int, help="alphabet size (pads unlisted symbols with zero counts)")
    p.add_argument("--f", type=float, help="density-ratio bound; clips the optimal estimate to [0, log f]")
    p.add_argument("--config", help="key=value estimator configuration file")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="Monte Carlo RMSE sweep, CSV output")
    p.add_argument("--family", choices=[f.value for f in bench.Family], default="worst_case_I")
    p.add_argument("--sweep", choices=[s.value for s in bench.Sweep], default="vary_m")
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--f", type=float, default=5.0)
    p.add_argument("--alpha-p", type=float, default=1.0)
    p.add_argument("--alpha-q", type=float, default=0.8)
    p.add_argument("--grid", type=_int_list, help="comma-separated m values (vary_m) or k values (vary_k)")
    p.add_argument("--rho", type=float, help="n = rho * f * m in the vary_m sweep")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--seed", type=int, default=None, help="default: $DIVRATE_SEED or 0")
    p.add_argument("--config")
    p.add_argument("--p-file")
    p.add_argument("--q-file")
    p.add_argument("--budget", type=float, default=bench.DEFAULT_BUDGET)
    p.add_argument("--no-timing", action="store_true", help="write wall_seconds as 0 for byte-stable output")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("remez", help="best uniform approximation of x log x")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--interval", type=float, help="approximate on [0, a] instead of [0, 1]")
    p.set_defaults(func=cmd_remez)

    p = sub.add_parser("construct", help="write a named distribution family to files")
    p.add_argument("family", choices=["uniform", "zipf", "zipf_pair", "worst_case_I", "bias_I", "bias_II",
                                      "twopoint_m", "twopoint_n", "inconsistency"])
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--f", type=float, default=10.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--alpha-q", type=float, default=0.8)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_construct)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", 0) is None:
        try:
            args.seed = _seed_default()
        except ValueError:
            print("divrate: DIVRATE_SEED must be a decimal integer", file=sys.stderr)
            return 2
    try:
        return args.func(args, out)
    except (ValueError, OSError, RuntimeError, OverflowError) as exc:
        print(f"divrate: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
