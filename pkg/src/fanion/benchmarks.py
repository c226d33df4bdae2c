"""Benchmark driver comparing the truncated-SVD engines and the Newton-Schulz
polar iteration on dense Gaussian matrices, with err1/err2 against exact SVD."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .engines import EngineConfig, approximation_errors, compute_topk, newton_schulz_polar
from .matrices import exact_svd


@dataclass
class BenchRow:
    rows: int
    cols: int
    k: int
    engine: str
    trials: int
    err1: float
    err2: float | None  # None for newton-schulz, which yields no singular values
    matvecs: float
    iterations: float
    wall_time: float
    converged: float  # fraction of trials that converged


def _trial_matrix(rows: int, cols: int, seed: int, trial: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, rows, cols, trial)))
    return rng.standard_normal((rows, cols))


def _polar_row(rows, cols, cfg, trials, seed) -> BenchRow:
    errs, matvecs, iters, times, conv = [], [], [], [], []
    for trial in range(trials):
        m = _trial_matrix(rows, cols, seed, trial)
        reference = exact_svd(m)
        exact_polar = reference.projector_sum()
        start = time.perf_counter()
        result = newton_schulz_polar(m, tol=cfg.tol, max_iters=cfg.resolved_max_iters())
        times.append(time.perf_counter() - start)
        errs.append(
            float(np.linalg.norm(result.polar - exact_polar) / np.linalg.norm(exact_polar))
        )
        matvecs.append(result.matvecs)
        iters.append(result.iterations)
        conv.append(result.converged)
    return BenchRow(
        rows=rows,
        cols=cols,
        k=min(rows, cols),
        engine="newton-schulz",
        trials=trials,
        err1=float(np.mean(errs)),
        err2=None,
        matvecs=float(np.mean(matvecs)),
        iterations=float(np.mean(iters)),
        wall_time=float(np.mean(times)),
        converged=float(np.mean(conv)),
    )


def _topk_row(rows, cols, k, cfg, trials, seed) -> BenchRow:
    err1s, err2s, matvecs, iters, times, conv = [], [], [], [], [], []
    for trial in range(trials):
        m = _trial_matrix(rows, cols, seed, trial)
        reference = exact_svd(m)
        report = compute_topk(m, replace(cfg, k=k, seed=trial))
        e1, e2 = approximation_errors(report.factors, reference, k)
        err1s.append(e1)
        err2s.append(e2)
        matvecs.append(report.matvecs)
        iters.append(report.iterations)
        times.append(report.wall_time)
        conv.append(report.converged)
    return BenchRow(
        rows=rows,
        cols=cols,
        k=k,
        engine=cfg.engine,
        trials=trials,
        err1=float(np.mean(err1s)),
        err2=float(np.mean(err2s)),
        matvecs=float(np.mean(matvecs)),
        iterations=float(np.mean(iters)),
        wall_time=float(np.mean(times)),
        converged=float(np.mean(conv)),
    )


def _bench_cell(args) -> BenchRow:
    rows, cols, k, cfg, trials, seed = args
    if cfg.engine == "newton-schulz":
        return _polar_row(rows, cols, cfg, trials, seed)
    return _topk_row(rows, cols, k, cfg, trials, seed)


def svd_engine_benchmark(
    sizes,
    ks,
    engines,
    trials: int = 3,
    seed: int = 0,
    workers: int = 1,
) -> list[BenchRow]:
    """One row per (size, k, engine) cell, averaged over Gaussian trial matrices.

    The same trial matrices (and the same exact-SVD reference) are used for
    every engine at a given size.  Newton-Schulz ignores k and contributes one
    full-rank polar row per size.  Cells may run in parallel; output order is
    the deterministic grid order regardless.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    cells = []
    for rows, cols in sizes:
        for cfg in engines:
            if not isinstance(cfg, EngineConfig):
                raise TypeError(f"engines must be EngineConfig values, got {cfg!r}")
            if cfg.engine == "newton-schulz":
                cells.append((rows, cols, min(rows, cols), cfg, trials, seed))
                continue
            for k in ks:
                if k > min(rows, cols):
                    raise ValueError(f"k={k} exceeds min dimension of {rows}x{cols}")
                cells.append((rows, cols, k, cfg, trials, seed))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bench_cell, cells))
    return [_bench_cell(cell) for cell in cells]
