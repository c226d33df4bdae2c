"""Command-line interface.

Subcommands: bench-lls (least-squares runs and grid searches), bench-svd
(engine comparison tables), lmo-eval (one oracle evaluation), ball-geometry
(norm-ball boundary point clouds).  Exit codes: 0 success, 1 divergence or
non-convergence of the requested run, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import plotting
from .benchmarks import svd_engine_benchmark
from .engines import ENGINES, EngineConfig
from .leastsquares import RunConfig, grid_search, lls_make, run_optimizer
from .lmo import format_lmo_spec, parse_lmo_spec, support_value, lmo_evaluate
from .norms import ball_boundary_samples, parse_norm_kind
from .reports import emit_report, load_matrix_csv, save_matrix_csv


def _parse_size(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")


def _parse_grid(text: str) -> list[float]:
    """Comma-separated values, or an inclusive start:stop:step range."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(count, 1))]
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer list {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fanion")
    sub = parser.add_subparsers(dest="command", required=True)

    lls = sub.add_parser("bench-lls", help="least-squares benchmark run or grid search")
    lls.add_argument("--size", type=_parse_size, default=(500, 500), metavar="MxN")
    lls.add_argument("--spec", required=True, help="LMO spec text, e.g. muon or fanion:k=10")
    lls.add_argument("--lr", type=_parse_grid, required=True, metavar="GRID")
    lls.add_argument("--momentum", type=_parse_grid, default=[0.0], metavar="GRID")
    lls.add_argument("--mode", choices=("none", "heavy-ball", "nesterov"), default="nesterov")
    lls.add_argument("--threshold", type=float, default=1e-3)
    lls.add_argument("--max-iters", type=int, default=5000)
    lls.add_argument("--seed", type=int, default=0)
    lls.add_argument("--x0-std", type=float, default=0.1)
    lls.add_argument("--log-norms", action="store_true")
    lls.add_argument("--full-trace", action="store_true",
                     help="keep iterating past the loss threshold")
    lls.add_argument("--workers", type=int, default=1, help="parallel grid cells")
    lls.add_argument("--out", required=True)
    lls.add_argument("--format", choices=("csv", "json"), default="csv")
    lls.add_argument("--plot", help="also render a figure to this path")

    svd = sub.add_parser("bench-svd", help="compare SVD engines on Gaussian matrices")
    svd.add_argument("--sizes", type=str, default="500x500")
    svd.add_argument("--k", type=_parse_int_list, default=[5, 50])
    svd.add_argument("--engines", type=str, default="trlan,rsvd,power,newton-schulz")
    svd.add_argument("--trials", type=int, default=3)
    svd.add_argument("--tol", type=float, default=1e-6)
    svd.add_argument("--seed", type=int, default=0)
    svd.add_argument("--workers", type=int, default=1)
    svd.add_argument("--out", required=True)
    svd.add_argument("--format", choices=("csv", "json"), default="csv")
    svd.add_argument("--plot", help="also render a figure to this path")

    ev = sub.add_parser("lmo-eval", help="evaluate one LMO direction and support value")
    ev.add_argument("--spec", required=True)
    ev.add_argument("--matrix", required=True, help="input matrix CSV (no header)")
    ev.add_argument("--out", required=True)
    ev.add_argument("--format", choices=("csv", "json"), default="csv")

    ball = sub.add_parser("ball-geometry", help="sample a norm-ball boundary")
    ball.add_argument("--norm", required=True, help="norm kind text, e.g. kyfan:k=2")
    ball.add_argument("--dims", type=int, choices=(2, 3), required=True)
    ball.add_argument("--resolution", type=int, default=360)
    ball.add_argument("--scale", type=float, default=1.0)
    ball.add_argument("--dual", action="store_true", help="sample the dual ball instead")
    ball.add_argument("--out", required=True)
    ball.add_argument("--format", choices=("csv", "json"), default="csv")
    ball.add_argument("--plot", help="also render a figure to this path")
    return parser


def _cmd_bench_lls(args) -> int:
    spec = parse_lmo_spec(args.spec)
    rows, cols = args.size
    problem = lls_make(rows, cols, x0_std=args.x0_std, seed=args.seed)
    single = len(args.lr) == 1 and len(args.momentum) == 1
    if single:
        cfg = RunConfig(
            spec=spec,
            lr=args.lr[0],
            beta=args.momentum[0],
            mode=args.mode,
            max_iters=args.max_iters,
            loss_threshold=args.threshold,
            log_norms=args.log_norms,
            stop_at_threshold=not args.full_trace,
            seed=args.seed,
        )
        trace = run_optimizer(problem, cfg)
        emit_report(trace, format=args.format, path=args.out)
        if args.plot:
            plotting.plot_run_trace(trace, args.plot, title=format_lmo_spec(spec))
        if trace.diverged:
            print(f"{format_lmo_spec(spec)}: diverged", file=sys.stderr)
            return 1
        if trace.iters_to_threshold is None:
            print(
                f"{format_lmo_spec(spec)}: threshold {args.threshold} not reached "
                f"in {args.max_iters} iterations",
                file=sys.stderr,
            )
            return 1
        print(
            f"{format_lmo_spec(spec)}: reached {args.threshold} after "
            f"{trace.iters_to_threshold} iterations ({trace.wall_time:.2f}s)"
        )
        return 0

    grid = grid_search(
        problem,
        spec,
        args.lr,
        args.momentum,
        mode=args.mode,
        max_iters=args.max_iters,
        loss_threshold=args.threshold,
        seed=args.seed,
        workers=args.workers,
    )
    emit_report(grid, format=args.format, path=args.out)
    if args.plot:
        plotting.plot_grid_result(grid, args.plot, title=format_lmo_spec(spec))
    best = grid.best
    if best.iters_to_threshold is None:
        print("no grid cell reached the threshold", file=sys.stderr)
        return 1
    print(
        f"best cell: lr={best.lr:g} momentum={best.beta:g} "
        f"iterations={best.iters_to_threshold}"
    )
    return 0


def _cmd_bench_svd(args) -> int:
    sizes = [_parse_size(tok) for tok in args.sizes.split(",")]
    names = [tok.strip() for tok in args.engines.split(",")]
    for name in names:
        if name not in ENGINES:
            raise ValueError(f"unknown engine {name!r}, expected one of {ENGINES}")
    engines = [EngineConfig(engine=name, tol=args.tol, seed=args.seed) for name in names]
    rows = svd_engine_benchmark(
        sizes, args.k, engines, trials=args.trials, seed=args.seed, workers=args.workers
    )
    emit_report(rows, format=args.format, path=args.out)
    if args.plot:
        plotting.plot_bench_table(rows, args.plot)
    for r in rows:
        err2 = "-" if r.err2 is None else f"{r.err2:.2e}"
        print(
            f"{r.rows}x{r.cols} k={r.k:<4d} {r.engine:<14s} err1={r.err1:.2e} "
            f"err2={err2} matvecs={r.matvecs:.0f} iters={r.iterations:.0f}"
        )
    return 0


def _cmd_lmo_eval(args) -> int:
    spec = parse_lmo_spec(args.spec)
    m = load_matrix_csv(args.matrix)
    direction = lmo_evaluate(m, spec)
    value = support_value(m, spec)
    if args.format == "csv":
        save_matrix_csv(args.out, direction)
    else:
        payload = {
            "spec": format_lmo_spec(spec),
            "support_value": value,
            "direction": direction.tolist(),
        }
        import json

        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"support_value={value!r}")
    return 0


def _cmd_ball_geometry(args) -> int:
    kind = parse_norm_kind(args.norm)
    points = ball_boundary_samples(
        kind, dims=args.dims, resolution=args.resolution, scale=args.scale, dual=args.dual
    )
    emit_report(points, format=args.format, path=args.out)
    if args.plot:
        suffix = " (dual ball)" if args.dual else ""
        plotting.plot_ball_points(points, args.plot, title=args.norm + suffix)
    print(f"wrote {len(points)} boundary points to {args.out}")
    return 0


_COMMANDS = {
    "bench-lls": _cmd_bench_lls,
    "bench-svd": _cmd_bench_svd,
    "lmo-eval": _cmd_lmo_eval,
    "ball-geometry": _cmd_ball_geometry,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
