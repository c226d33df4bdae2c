"""Figure rendering for benchmark reports (written to files next to the
CSV/JSON output; no interactive backends)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .leastsquares import GridResult, RunTrace


def plot_run_trace(trace: RunTrace, path, title: str = "") -> None:
    """Loss curve, plus full-gradient norm curves when they were logged."""
    logged = trace.grad_frobenius is not None
    fig, axes = plt.subplots(1, 2 if logged else 1, figsize=(10 if logged else 6, 4))
    ax_loss = axes[0] if logged else axes
    ax_loss.semilogy(np.arange(len(trace.losses)), trace.losses)
    ax_loss.set_xlabel("iteration")
    ax_loss.set_ylabel("loss")
    if trace.iters_to_threshold is not None:
        ax_loss.axvline(trace.iters_to_threshold, color="gray", ls="--", lw=0.8)
    if logged:
        ax = axes[1]
        ax.semilogy(trace.grad_frobenius, label="frobenius")
        ax.semilogy(trace.grad_spectral, label="spectral")
        ax.semilogy(trace.grad_nuclear, label="nuclear")
        ax.set_xlabel("iteration")
        ax.set_ylabel("full-gradient norm")
        ax.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_grid_result(grid: GridResult, path, title: str = "") -> None:
    """Heatmap of iterations-to-threshold over the (lr, beta) grid."""
    lrs = sorted({c.lr for c in grid.cells})
    betas = sorted({c.beta for c in grid.cells})
    img = np.full((len(betas), len(lrs)), np.nan)
    for c in grid.cells:
        val = c.iters_to_threshold
        img[betas.index(c.beta), lrs.index(c.lr)] = np.nan if val is None else val
    fig, ax = plt.subplots(figsize=(6, 4))
    pcm = ax.pcolormesh(np.arange(len(lrs) + 1), np.arange(len(betas) + 1), img, shading="flat")
    ax.set_xticks(np.arange(len(lrs)) + 0.5, [f"{v:g}" for v in lrs], rotation=45, fontsize=7)
    ax.set_yticks(np.arange(len(betas)) + 0.5, [f"{v:g}" for v in betas], fontsize=7)
    ax.set_xlabel("lr")
    ax.set_ylabel("momentum")
    fig.colorbar(pcm, ax=ax, label="iterations to threshold")
    ax.plot(
        lrs.index(grid.best.lr) + 0.5, betas.index(grid.best.beta) + 0.5,
        marker="*", color="red", ms=12,
    )
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bench_table(rows: list, path, title: str = "") -> None:
    """Accuracy-versus-matvecs scatter, one marker group per engine."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for engine in sorted({r.engine for r in rows}):
        sub = [r for r in rows if r.engine == engine]
        errs = [r.err2 if r.err2 is not None else r.err1 for r in sub]
        ax.loglog([r.matvecs for r in sub], errs, "o", label=engine)
        for r, err in zip(sub, errs):
            ax.annotate(f"k={r.k}", (r.matvecs, err), fontsize=7,
                        textcoords="offset points", xytext=(4, 2))
    ax.set_xlabel("matvecs")
    ax.set_ylabel("relative error")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ball_points(points: np.ndarray, path, title: str = "") -> None:
    """Scatter of a sampled norm-ball boundary in 2-D or 3-D."""
    points = np.asarray(points)
    if points.shape[1] == 2:
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot(points[:, 0], points[:, 1], ".", ms=2)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="3d")
        ax.scatter(points[:, 0], points[:, 1], points[:, 2], s=2)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_zlabel("z")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
