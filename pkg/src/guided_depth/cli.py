"""Command-line front end: upsample, degrade, evaluate, bench, gradcheck."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .formats import (
    FLOAT_MAP,
    ConfigFileError,
    DepthEncoding,
    ImageFormatError,
    encoding_for,
    load_config,
    read_color,
    read_depth,
    write_bandwidth_visual,
    write_depth,
)
from .imagecore import DepthMap, DimensionError, InputRangeError
from .pipeline import METHODS, DegradeSpec, center_crop, degrade, format_table, rmse, run_benchmark
from .solver import (
    ALPHA_SCHEDULE,
    MAX_ITERS_SCHEDULE,
    ConfigError,
    SolverConfig,
    mrf_upsample,
    upsample,
    upsampling_factor,
)

log = logging.getLogger("guided_depth")

_D = SolverConfig()
_SCHED = ", ".join(f"{k}x: {v}" for k, v in ALPHA_SCHEDULE.items())
_ITERS = ", ".join(f"{k}x: {v}" for k, v in MAX_ITERS_SCHEDULE.items())


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--config", type=Path, help="key = value config file; flags override it")
    g.add_argument("--alpha", type=float,
                   help=f"data/smoothness balance (default: by factor, {_SCHED}; nearest entry for other factors)")
    g.add_argument("--beta", type=float, help=f"bandwidth smoothness weight (default: {_D.beta})")
    g.add_argument("--sigma-s", type=float, help=f"spatial window sigma in pixels (default: {_D.sigma_s:g})")
    g.add_argument("--sigma-c", type=float, help=f"colour sigma, normalized units (default: 10/255 = {_D.sigma_c:.6f})")
    g.add_argument("--tau", type=float, help=f"bandwidth step size (default: {_D.tau})")
    g.add_argument("--lambda-init", type=float,
                   help=f"initial bandwidth (default: 7/255 = {_D.lambda_init:.6f})")
    g.add_argument("--lambda-min", type=float, help=f"bandwidth lower clamp (default: 1/255 = {_D.lambda_min:.6f})")
    g.add_argument("--lambda-max", type=float, help=f"bandwidth upper clamp (default: 50/255 = {_D.lambda_max:.6f})")
    g.add_argument("--patch-radius", type=int,
                   help=f"window radius; 9 gives the 19x19 patch (default: {_D.patch_radius})")
    g.add_argument("--max-iters", type=int, help=f"iteration budget (default: by factor, {_ITERS})")
    g.add_argument("--tol", type=float, help=f"stop when max |dD| falls below this (default: {_D.tol:g})")
    g.add_argument("--no-adaptive-bandwidth", action="store_true",
                   help="keep the bandwidth fixed at --lambda-init")
    g.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it (default: 1)")


def _add_degrade_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("degradation")
    g.add_argument("--noise-sigma", type=float, default=5 / 255,
                   help="Gaussian noise std on the low-resolution depth, normalized units (default: 5/255)")
    g.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")


_FLAG_FIELDS = ("alpha", "beta", "sigma_s", "sigma_c", "tau", "lambda_init", "lambda_min",
                "lambda_max", "patch_radius", "max_iters", "tol")


def config_from_args(args) -> SolverConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SolverConfig()
    changes = {k: getattr(args, k) for k in _FLAG_FIELDS if getattr(args, k, None) is not None}
    if getattr(args, "no_adaptive_bandwidth", False):
        changes["adaptive_bandwidth"] = False
    return cfg.replace(**changes) if changes else cfg


def _depth_encoding(path, template: DepthEncoding | None = None) -> DepthEncoding:
    if Path(path).suffix.lower() == ".pfm":
        return DepthEncoding(FLOAT_MAP, template.max_mm if template else None)
    if template is not None and template.kind != FLOAT_MAP:
        return template
    return DepthEncoding("gray16")


def cmd_upsample(args) -> int:
    enc = encoding_for(args.depth_in)
    low = read_depth(args.depth_in, enc)
    guide = read_color(args.guide_in)
    factor = upsampling_factor(low.shape, guide.shape)
    if args.factor is not None and args.factor != factor:
        raise ConfigError(f"--factor {args.factor} does not match the image sizes (ratio {factor})")
    cfg = config_from_args(args).for_factor(factor)
    bw = None
    if args.method == "ours":
        out, bw, rep = upsample(low, guide, cfg, threads=args.threads)
    elif args.method == "mrf":
        out, rep = mrf_upsample(low, guide, cfg, threads=args.threads)
    else:
        from .imagecore import bicubic_upsample
        out, rep = bicubic_upsample(low, factor), None
    write_depth(out, args.out, _depth_encoding(args.out, enc))
    summary = {"method": args.method, "factor": factor, "alpha": cfg.alpha, "config": cfg.__dict__}
    if rep is not None:
        summary.update(iterations=rep.iterations_run, converged=rep.converged,
                       final_objective=rep.final_objective, objective_trace=rep.objective_trace,
                       wall_time=round(rep.wall_time, 3))
    if args.bandwidth_out:
        if bw is None:
            raise ConfigError("--bandwidth-out needs --method ours")
        write_bandwidth_visual(bw, args.bandwidth_out)
    if args.report:
        Path(args.report).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{args.method} {factor}x alpha={cfg.alpha} "
          + (f"iterations={rep.iterations_run} converged={rep.converged} " if rep else "")
          + f"-> {args.out}")
    return 0


def cmd_degrade(args) -> int:
    enc = encoding_for(args.gt_in)
    gt = read_depth(args.gt_in, enc)
    gt = DepthMap(center_crop(gt.values, args.factor), max_mm=gt.max_mm)
    low = degrade(gt, DegradeSpec(args.factor, args.noise_sigma, args.seed))
    write_depth(low, args.out, _depth_encoding(args.out, enc))
    print(f"{tuple(gt.shape)} -> {tuple(low.shape)} sigma={args.noise_sigma:g} seed={args.seed} -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    a = read_depth(args.result, encoding_for(args.result))
    b = read_depth(args.reference, encoding_for(args.reference))
    if args.crop and tuple(a.shape) != tuple(b.shape):
        (h, w), (H, W) = a.shape, b.shape
        if h > H or w > W:
            raise DimensionError(f"result {h}x{w} is larger than reference {H}x{W}")
        y0, x0 = (H - h) // 2, (W - w) // 2
        b = DepthMap(b.values[y0:y0 + h, x0:x0 + w], max_mm=b.max_mm)
    out = {"rmse_255": rmse(a, b)}
    max_mm = args.max_mm or b.max_mm
    if max_mm:
        out["rmse_mm"] = rmse(a, b, "millimeters", max_mm)
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    factors = [int(f) for f in args.factors.split(",") if f]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg = config_from_args(args)
    spec = DegradeSpec(1, args.noise_sigma, args.seed)
    scenes = None
    if args.synthetic:
        from .pipeline import synthetic_dataset
        scenes = synthetic_dataset((args.synthetic_size, args.synthetic_size), seed=args.seed)
    elif args.dataset_dir is None:
        raise ConfigError("give a dataset directory or --synthetic")
    elif not Path(args.dataset_dir).is_dir():
        print(f"error: {args.dataset_dir}: not a readable directory", file=sys.stderr)
        return 2
    results = run_benchmark(args.dataset_dir, factors, methods, cfg, spec, threads=args.threads,
                            timing=not args.no_timing, scenes=scenes, report_path=args.report,
                            table_path=args.table)
    sys.stdout.write(format_table(results))
    if any(r.rmse_mm is not None for r in results):
        sys.stdout.write("\nmillimetres\n" + format_table(results, "rmse_mm"))
    if not results:
        log.warning("no scenes found; nothing to do")
        return 0
    if all(r.error is not None for r in results):
        return 1
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import CHECK_RADIUS, gradcheck

    if not 1 <= args.size <= 32:
        raise ConfigError("--size must be between 1 and 32")
    if args.patch_radius is None and args.config is None:
        args.patch_radius = CHECK_RADIUS
    cfg = config_from_args(args)
    err = gradcheck(args.seed, args.size, cfg, flip_regularizer=args.flip_regularizer_sign)
    ok = err < 1e-4
    print(f"max relative error {err:.3e} ({'ok' if ok else 'FAIL'}, threshold 1e-4)")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="guided-depth", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    up = sub.add_parser("upsample", help="upsample a low-resolution depth map with a guidance image")
    up.add_argument("depth_in", help="low-resolution depth (.pgm 8/16-bit or .pfm)")
    up.add_argument("guide_in", help="high-resolution guidance (.ppm)")
    up.add_argument("out", help="output depth (.pgm or .pfm)")
    up.add_argument("--method", choices=("ours", "mrf", "bicubic"), default="ours")
    up.add_argument("--factor", type=int, help="expected factor; checked against the image sizes")
    up.add_argument("--report", help="write a JSON run report here")
    up.add_argument("--bandwidth-out", help="write the bandwidth map as an 8-bit PGM here")
    _add_solver_flags(up)
    up.set_defaults(func=cmd_upsample)

    dg = sub.add_parser("degrade", help="make a noisy low-resolution input from ground truth")
    dg.add_argument("gt_in")
    dg.add_argument("out")
    dg.add_argument("--factor", type=int, default=4, help="downsampling factor (default: 4)")
    _add_degrade_flags(dg)
    dg.set_defaults(func=cmd_degrade)

    ev = sub.add_parser("evaluate", help="RMSE between a result and the ground truth")
    ev.add_argument("result")
    ev.add_argument("reference")
    ev.add_argument("--max-mm", type=float, help="metric range for millimetre RMSE")
    ev.add_argument("--crop", action="store_true", help="centre-crop the reference to the result size")
    ev.set_defaults(func=cmd_evaluate)

    be = sub.add_parser("bench", help="degrade/upsample/evaluate over a dataset")
    be.add_argument("dataset_dir", nargs="?", help="directory of <scene>/{depth.pgm,color.ppm}")
    be.add_argument("--synthetic", action="store_true", help="use the built-in synthetic probe scenes")
    be.add_argument("--synthetic-size", type=int, default=128, help="synthetic scene size (default: 128)")
    be.add_argument("--factors", default="2,4,8,16", help="comma list (default: 2,4,8,16)")
    be.add_argument("--methods", default=",".join(METHODS), help="comma list (default: bicubic,mrf,ours)")
    be.add_argument("--report", help="newline-delimited JSON results")
    be.add_argument("--table", help="also write the formatted table here")
    be.add_argument("--no-timing", action="store_true", help="omit wall-clock seconds (byte-stable reports)")
    _add_solver_flags(be)
    _add_degrade_flags(be)
    be.set_defaults(func=cmd_bench)

    gc = sub.add_parser("gradcheck", help="check the analytic bandwidth gradient by finite differences")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--size", type=int, default=8, help="square instance size, at most 32 (default: 8)")
    gc.add_argument("--flip-regularizer-sign", action="store_true",
                    help="debug: use the opposite sign for the bandwidth regularizer term")
    _add_solver_flags(gc)
    gc.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ImageFormatError, DimensionError, InputRangeError, ConfigError, ConfigFileError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
