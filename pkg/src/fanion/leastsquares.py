"""Synthetic linear least squares benchmark: problem generation, the optimizer
run loop with loss/gradient-norm traces, and hyperparameter grid search."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .lmo import (
    LmoSpec,
    MOMENTUM_MODES,
    init_state,
    optimizer_step,
    _coerce_spec,
)
from .matrices import as_matrix, random_gaussian, random_psd_uniform_spectrum

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class LlsProblem:
    """Quadratic F(X) = 0.5 <X - S, M (X - S) N> with PSD M and N."""

    m_left: np.ndarray
    n_right: np.ndarray
    s: np.ndarray
    x0: np.ndarray


def lls_make(m_dim: int, n_dim: int, x0_std: float = 0.1, seed=0) -> LlsProblem:
    """Problem instance with uniform-(0,1) PSD spectra, S = 0, Gaussian X0.

    x0_std defaults to 0.1, i.e. entries of variance 0.01.
    """
    if m_dim < 1 or n_dim < 1:
        raise ValueError(f"dims must be >= 1, got {m_dim}x{n_dim}")
    rng = np.random.default_rng(seed)
    m_left = random_psd_uniform_spectrum(m_dim, rng)
    n_right = random_psd_uniform_spectrum(n_dim, rng)
    x0 = random_gaussian(m_dim, n_dim, x0_std, rng)
    return LlsProblem(m_left=m_left, n_right=n_right, s=np.zeros((m_dim, n_dim)), x0=x0)


def _check_conformance(p: LlsProblem, x: np.ndarray) -> None:
    expected = (p.m_left.shape[0], p.n_right.shape[0])
    if x.shape != expected:
        raise ValueError(f"x must have shape {expected}, got {x.shape}")


def lls_loss(p: LlsProblem, x) -> float:
    x = as_matrix(x)
    _check_conformance(p, x)
    e = x - p.s
    return 0.5 * float(np.vdot(e, p.m_left @ e @ p.n_right))


def lls_grad(p: LlsProblem, x) -> np.ndarray:
    """Gradient M (X - S) N; relies on the symmetry of M and N."""
    x = as_matrix(x)
    _check_conformance(p, x)
    return p.m_left @ (x - p.s) @ p.n_right


@dataclass(frozen=True)
class RunConfig:
    spec: LmoSpec
    lr: float
    beta: float
    mode: str = "nesterov"
    max_iters: int = 5000
    loss_threshold: float = 1e-3
    log_norms: bool = False
    stop_at_threshold: bool = True
    seed: int = 0  # problem seed; recorded in reports for provenance

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.mode not in MOMENTUM_MODES:
            raise ValueError(f"mode must be one of {MOMENTUM_MODES}, got {self.mode!r}")
        if self.loss_threshold <= 0:
            raise ValueError(f"loss_threshold must be > 0, got {self.loss_threshold}")


@dataclass
class RunTrace:
    losses: np.ndarray
    grad_frobenius: np.ndarray | None
    grad_spectral: np.ndarray | None
    grad_nuclear: np.ndarray | None
    iters_to_threshold: int | None
    wall_time: float
    diverged: bool = False


def _gradient_norms(g: np.ndarray) -> tuple[float, float, float]:
    s = np.linalg.svd(g, compute_uv=False)
    return float(np.linalg.norm(g)), float(s[0]), float(np.sum(s))


def run_optimizer(p: LlsProblem, cfg: RunConfig) -> RunTrace:
    """Iterate the momentum-wrapped LMO update with constant learning rate.

    The loss is recorded once per iteration (plus the initial value) and the
    threshold is checked on the post-update loss, counting the first update as
    iteration 1.  Loss exceeding 1e6 times the initial value aborts the run
    and flags the trace as diverged.
    """
    start = time.perf_counter()
    state = init_state(p.x0, beta=cfg.beta, mode=cfg.mode)
    # One fused product M (X - S) N per iteration serves as both the gradient
    # at the current iterate and the loss evaluation.
    e = state.x - p.s
    grad = p.m_left @ e @ p.n_right
    losses = [0.5 * float(np.vdot(e, grad))]
    norms = [_gradient_norms(grad)] if cfg.log_norms else None
    limit = DIVERGENCE_FACTOR * max(losses[0], np.finfo(float).tiny)
    iters_to_threshold = None
    diverged = False

    for t in range(1, cfg.max_iters + 1):
        state = optimizer_step(state, grad, cfg.lr, cfg.spec)
        e = state.x - p.s
        grad = p.m_left @ e @ p.n_right
        loss = 0.5 * float(np.vdot(e, grad))
        losses.append(loss)
        if cfg.log_norms:
            fro, spectral, nuclear = _gradient_norms(grad)
            if not (spectral <= fro * (1 + 1e-9) and fro <= nuclear * (1 + 1e-9)):
                raise RuntimeError(
                    f"gradient norm ordering violated: {spectral=} {fro=} {nuclear=}"
                )
            norms.append((fro, spectral, nuclear))
        if not np.isfinite(loss) or loss > limit:
            diverged = True
            break
        if iters_to_threshold is None and loss <= cfg.loss_threshold:
            iters_to_threshold = t
            if cfg.stop_at_threshold:
                break

    if norms is not None:
        fro_arr, spec_arr, nuc_arr = (np.array(col) for col in zip(*norms))
    else:
        fro_arr = spec_arr = nuc_arr = None
    return RunTrace(
        losses=np.array(losses),
        grad_frobenius=fro_arr,
        grad_spectral=spec_arr,
        grad_nuclear=nuc_arr,
        iters_to_threshold=iters_to_threshold,
        wall_time=time.perf_counter() - start,
        diverged=diverged,
    )


def bench_lls_run(m_dim: int, n_dim: int, x0_std: float, cfg: RunConfig) -> RunTrace:
    """Build the problem from cfg.seed and run it (picklable process worker)."""
    problem = lls_make(m_dim, n_dim, x0_std=x0_std, seed=cfg.seed)
    return run_optimizer(problem, cfg)


# --------------------------------------------------------------------------
# Grid search
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridCell:
    lr: float
    beta: float
    iters_to_threshold: int | None


@dataclass
class GridResult:
    cells: list
    best: GridCell


def _cell_sort_key(cell: GridCell):
    reached = cell.iters_to_threshold if cell.iters_to_threshold is not None else np.inf
    return (reached, cell.lr, cell.beta)


_WORKER_STATE: dict = {}


def _init_grid_worker(problem: LlsProblem, base: RunConfig) -> None:
    _WORKER_STATE["problem"] = problem
    _WORKER_STATE["base"] = base


def _grid_cell_worker(args: tuple) -> GridCell:
    lr, beta = args
    cfg = replace(_WORKER_STATE["base"], lr=lr, beta=beta)
    trace = run_optimizer(_WORKER_STATE["problem"], cfg)
    return GridCell(lr=lr, beta=beta, iters_to_threshold=trace.iters_to_threshold)


def grid_search(
    p: LlsProblem,
    spec,
    lr_grid,
    beta_grid,
    mode: str = "nesterov",
    max_iters: int = 5000,
    loss_threshold: float = 1e-3,
    seed: int = 0,
    workers: int = 1,
) -> GridResult:
    """Run every (lr, beta) cell on the same problem and pick the best.

    Cells are independent and may run in parallel; results are merged in grid
    order so the outcome does not depend on scheduling.  Best is the cell with
    the fewest iterations to threshold, ties broken by smaller lr then smaller
    beta; cells that diverge or never reach the threshold record None.
    """
    lr_grid = [float(v) for v in lr_grid]
    beta_grid = [float(v) for v in beta_grid]
    if not lr_grid or not beta_grid:
        raise ValueError("lr_grid and beta_grid must be nonempty")
    spec = _coerce_spec(spec)
    base = RunConfig(
        spec=spec,
        lr=lr_grid[0],
        beta=beta_grid[0],
        mode=mode,
        max_iters=max_iters,
        loss_threshold=loss_threshold,
        log_norms=False,
        stop_at_threshold=True,
        seed=seed,
    )
    pairs = [(lr, beta) for lr in lr_grid for beta in beta_grid]
    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_grid_worker, initargs=(p, base)
        ) as pool:
            cells = list(pool.map(_grid_cell_worker, pairs))
    else:
        cells = []
        for lr, beta in pairs:
            trace = run_optimizer(p, replace(base, lr=lr, beta=beta))
            cells.append(GridCell(lr=lr, beta=beta, iters_to_threshold=trace.iters_to_threshold))
    best = min(cells, key=_cell_sort_key)
    return GridResult(cells=cells, best=best)
