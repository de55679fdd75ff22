"""Command line entry point: ``ssmatte {matte,sweep,eval}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .dataterm import SamplingParams
from .errors import MattingError
from .evaluate import (DEFAULT_LAMBDAS, BenchmarkEntry, curve_records, ingest_benchmark, iteration_curve,
                       lambda_sweep, write_results)
from .imageio import load_alpha, load_image, load_trimap, save_alpha
from .metrics import Region, region_mask
from .solver import CGParams, check_lambda
from .ssl import RefinementParams, run_pipeline

log = logging.getLogger("ssmatte")


def _add_solver_args(p):
    p.add_argument("--lambda", dest="lam", type=float, default=0.001,
                   help="weight of the sampling data term, in [0, 1] (default 0.001)")
    p.add_argument("--samples", type=int, default=10, help="boundary samples per class per pixel")
    p.add_argument("--top-pairs", type=int, default=3, help="best sample pairs averaged per pixel")
    p.add_argument("--sigma", type=float, default=0.1, help="pair confidence falloff")
    p.add_argument("--lap-eps", type=float, default=1e-5, help="matting Laplacian regularizer")
    p.add_argument("--cg-tol", type=float, default=1e-7, help="CG relative residual tolerance")
    p.add_argument("--cg-max-iter", type=int, default=2000)


def _add_ssl_args(p, iters_default=4):
    p.add_argument("--iters", type=int, default=iters_default, help="trimap refinement rounds")
    p.add_argument("--t-alpha", type=float, default=0.95, help="promotion threshold on alpha")
    p.add_argument("--t-percent", type=float, default=0.10, help="share of unknown pixels ranked per round")


def _add_dataset_args(p):
    p.add_argument("--root", help="benchmark directory (input/, trimap1/, trimap2/, gt/)")
    p.add_argument("--level", type=int, choices=(1, 2), default=2, help="trimap coarse level")
    p.add_argument("-i", "--image", help="single input image (instead of --root)")
    p.add_argument("-t", "--trimap", help="trimap for --image")
    p.add_argument("-g", "--gt", help="ground-truth alpha for --image")
    p.add_argument("--mse-region", choices=[r.value for r in Region], default=Region.UNKNOWN_ONLY.value)
    p.add_argument("--out", default="results.csv", help="CSV output path")


def build_parser():
    parser = argparse.ArgumentParser(prog="ssmatte", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matte", help="compute an alpha matte")
    p.add_argument("-i", "--image", required=True)
    p.add_argument("-t", "--trimap", required=True)
    p.add_argument("-o", "--out", required=True, help="alpha PNG to write")
    p.add_argument("--trace", help="refinement trace CSV (default: <out>_trace.csv when --iters > 0)")
    p.add_argument("-g", "--gt", help="ground-truth alpha; adds per-iteration MSE to the trace")
    p.add_argument("--mse-region", choices=[r.value for r in Region], default=Region.UNKNOWN_ONLY.value)
    _add_solver_args(p)
    _add_ssl_args(p)
    p.set_defaults(func=cmd_matte)

    p = sub.add_parser("sweep", help="MSE over a grid of lambda values, no refinement")
    p.add_argument("--lambdas", type=float, nargs="*", default=list(DEFAULT_LAMBDAS))
    _add_dataset_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="MSE and PIMP for 0..--iters refinement rounds")
    _add_dataset_args(p)
    _add_solver_args(p)
    _add_ssl_args(p)
    p.set_defaults(func=cmd_eval)
    return parser


def _sampling(args):
    return SamplingParams(args.samples, args.top_pairs, args.sigma)


def _cg(args):
    return CGParams(args.cg_tol, args.cg_max_iter)


def _refinement(args):
    return RefinementParams(args.t_alpha, args.t_percent, args.iters)


def _entries(args):
    if args.root:
        return ingest_benchmark(args.root)
    if not (args.image and args.trimap):
        raise MattingError("give either --root or both --image and --trimap")
    for path in (args.image, args.trimap, args.gt):
        if path and not os.path.exists(path):
            raise FileNotFoundError(f"no such file: {path}")
    name = os.path.splitext(os.path.basename(args.image))[0]
    return [BenchmarkEntry(name, args.image, {args.level: args.trimap}, args.gt)]


def cmd_matte(args):
    check_lambda(args.lam)
    params = _refinement(args)
    image = load_image(args.image)
    trimap = load_trimap(args.trimap)
    truth = None
    region = None
    if args.gt:
        truth = load_alpha(args.gt)
        region = region_mask(args.mse_region, trimap)
    matte, trace = run_pipeline(image, trimap, args.lam, params, sampling=_sampling(args), cg=_cg(args),
                                lap_eps=args.lap_eps, truth=truth, mse_region=region)
    save_alpha(args.out, matte)
    if params.n_iters > 0:
        trace_path = args.trace or os.path.splitext(args.out)[0] + "_trace.csv"
        trace.write_csv(trace_path)
    return 0


def _common(args):
    return dict(region=Region(args.mse_region), sampling=_sampling(args), cg=_cg(args), lap_eps=args.lap_eps)


def cmd_sweep(args):
    for lam in args.lambdas:
        check_lambda(lam)
    records = []
    for entry in _entries(args):
        records.extend(lambda_sweep(entry, args.lambdas, args.level, **_common(args)))
    write_results(args.out, records)
    return 0


def cmd_eval(args):
    check_lambda(args.lam)
    _refinement(args)  # validates thresholds before any work
    records = []
    for entry in _entries(args):
        rows = iteration_curve(entry, args.lam, args.iters, args.level, t_alpha=args.t_alpha,
                               t_percent=args.t_percent, **_common(args))
        records.extend(curve_records(entry.name, args.lam, rows, args.mse_region))
    write_results(args.out, records)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc}", file=sys.stderr)
    except (MattingError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
