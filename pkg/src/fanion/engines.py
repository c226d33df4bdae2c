"""Iterative engines for top-k singular triplets and polar factors.

All engines count matvecs with one convention: a single application of the
input matrix (or its transpose) to one vector costs 1, so applying it to a
block of b columns costs b and one Gram application costs 2.  The
Newton-Schulz iteration counts applications of its iterate the same way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .matrices import SvdFactors, as_matrix

ENGINES = ("power", "rsvd", "trlan", "newton-schulz")

_DEFAULT_MAX_ITERS = {"power": 200, "rsvd": 200, "trlan": 1000, "newton-schulz": 100}


@dataclass(frozen=True)
class EngineConfig:
    """Configuration shared by the truncated-SVD engines.

    max_iters is in engine-native units: block iterations for power, power
    passes for rsvd, Lanczos steps (Gram applications) for trlan, and
    polynomial iterations for newton-schulz.  None picks a per-engine default.
    """

    engine: str = "trlan"
    k: int = 1
    tol: float = 1e-6
    max_iters: int | None = None
    oversampling: int = 10  # rsvd sketch surplus beyond k
    power_passes: int = 2   # rsvd minimum number of power passes
    subspace: int | None = None  # trlan basis size d; default max(2k + 10, 20)
    seed: int = 0

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}, expected one of {ENGINES}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.oversampling < 0:
            raise ValueError(f"oversampling must be >= 0, got {self.oversampling}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.subspace is not None and self.subspace < self.k + 2:
            raise ValueError(f"subspace must be >= k + 2, got {self.subspace}")

    def resolved_max_iters(self) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return _DEFAULT_MAX_ITERS[self.engine]


@dataclass
class EngineReport:
    factors: SvdFactors
    matvecs: int
    iterations: int
    wall_time: float
    converged: bool


class PolarResult(NamedTuple):
    polar: np.ndarray
    iterations: int
    matvecs: int
    converged: bool


class _CountedMatrix:
    """Dense matrix wrapper accounting one matvec per applied column."""

    def __init__(self, m: np.ndarray):
        self.m = m
        self.matvecs = 0

    @property
    def shape(self):
        return self.m.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        self.matvecs += 1 if x.ndim == 1 else x.shape[1]
        return self.m @ x

    def apply_t(self, x: np.ndarray) -> np.ndarray:
        self.matvecs += 1 if x.ndim == 1 else x.shape[1]
        return self.m.T @ x


def _check_rank(m: np.ndarray, k: int) -> None:
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"k={k} out of range [1, {min(m.shape)}] for shape {m.shape}")


def _orthonormal_fill(columns: list, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector orthogonal to the given columns (for zero singular values)."""
    basis = np.column_stack(columns) if columns else np.zeros((dim, 0))
    for _ in range(100):
        w = rng.standard_normal(dim)
        w -= basis @ (basis.T @ w)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            return w / nw
    raise RuntimeError("could not complete orthonormal basis")


def _secondary_vectors(
    counted: _CountedMatrix,
    primary: np.ndarray,
    apply_primary,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Map primary-side singular vectors through the matrix and normalize,
    yielding (sigma, secondary).  Columns for numerically zero sigma are filled
    with an orthonormal complement."""
    image = apply_primary(primary)
    sigma = np.linalg.norm(image, axis=0)
    floor = np.finfo(float).eps * max(float(sigma.max(initial=0.0)), 1e-300)
    cols = []
    for i in range(primary.shape[1]):
        if sigma[i] > floor:
            cols.append(image[:, i] / sigma[i])
        else:
            sigma[i] = 0.0
            cols.append(_orthonormal_fill(cols, image.shape[0], rng))
    return sigma, np.column_stack(cols)


# --------------------------------------------------------------------------
# Block power iteration
# --------------------------------------------------------------------------

def power_iteration_topk(m: np.ndarray, cfg: EngineConfig) -> EngineReport:
    """Block power iteration on the Gram matrix with per-step Rayleigh-Ritz.

    The left vectors are defined as u_i = M v_i / sigma_i, so the residual
    ||M v_i - sigma_i u_i|| vanishes by construction; convergence is declared
    on the complementary residual ||M^T u_i - sigma_i v_i|| <= tol * sigma_1.
    """
    start = time.perf_counter()
    m = as_matrix(m)
    k = cfg.k
    _check_rank(m, k)
    rng = np.random.default_rng(cfg.seed)
    counted = _CountedMatrix(m)
    n = m.shape[1]
    max_iters = cfg.resolved_max_iters()

    v_block, _ = np.linalg.qr(rng.standard_normal((n, k)))
    iterations = 0
    converged = False
    ritz = None
    while iterations < max_iters:
        y = counted.apply(v_block)      # k matvecs
        z = counted.apply_t(y)          # k matvecs
        iterations += 1
        # Rayleigh-Ritz on span(v_block): y^T y is the projected Gram matrix.
        theta, s_small = np.linalg.eigh(y.T @ y)
        order = np.argsort(theta)[::-1]
        theta = np.clip(theta[order], 0.0, None)
        s_small = s_small[:, order]
        sigma = np.sqrt(theta)
        ritz = (v_block @ s_small, sigma, z @ s_small)
        top = sigma[0]
        if top == 0.0:
            converged = True
            break
        # residual of M^T u_i - sigma_i v_i, computed from z without new matvecs
        resid = ritz[2] / np.where(sigma > 0, sigma, 1.0) - ritz[0] * sigma
        res_norms = np.linalg.norm(resid, axis=0)
        if np.all(res_norms <= cfg.tol * top):
            converged = True
            break
        v_block, _ = np.linalg.qr(z)

    v_r, sigma, _ = ritz
    sigma, u = _secondary_vectors(counted, v_r, counted.apply, rng)
    factors = SvdFactors(u=u, sigma=sigma, v=v_r)
    return EngineReport(
        factors=factors,
        matvecs=counted.matvecs,
        iterations=iterations,
        wall_time=time.perf_counter() - start,
        converged=converged,
    )


# --------------------------------------------------------------------------
# Randomized SVD with adaptive power passes
# --------------------------------------------------------------------------

def randomized_svd_topk(m: np.ndarray, cfg: EngineConfig) -> EngineReport:
    """Range sketch of width k + oversampling, refined by power passes until
    the top-k residuals reach tol (running at least cfg.power_passes passes).
    """
    start = time.perf_counter()
    m = as_matrix(m)
    k = cfg.k
    _check_rank(m, k)
    rng = np.random.default_rng(cfg.seed)
    counted = _CountedMatrix(m)
    rows, cols = m.shape
    width = min(k + cfg.oversampling, min(rows, cols))
    max_passes = max(cfg.resolved_max_iters(), cfg.power_passes)

    y = counted.apply(rng.standard_normal((cols, width)))  # width matvecs
    passes = 0
    converged = False
    while True:
        q, _ = np.linalg.qr(y)
        z = counted.apply_t(q)                              # width matvecs
        w, s, pt = np.linalg.svd(z, full_matrices=False)
        p = pt.T
        y = counted.apply(z)                                # width matvecs
        passes += 1
        # M w_i = y p_i / s_i, so the left-side residual is free to evaluate.
        top = s[0]
        if top == 0.0:
            converged = True
            break
        safe = np.where(s[:k] > 0, s[:k], 1.0)
        resid = y @ p[:, :k] / safe - (q @ p[:, :k]) * s[:k]
        res_norms = np.where(s[:k] > 0, np.linalg.norm(resid, axis=0), 0.0)
        if passes >= cfg.power_passes and np.all(res_norms <= cfg.tol * top):
            converged = True
            break
        if passes >= max_passes:
            break

    factors = SvdFactors(u=q @ p[:, :k], sigma=s[:k].copy(), v=w[:, :k])
    return EngineReport(
        factors=factors,
        matvecs=counted.matvecs,
        iterations=passes,
        wall_time=time.perf_counter() - start,
        converged=converged,
    )


# --------------------------------------------------------------------------
# Thick-restart Lanczos
# --------------------------------------------------------------------------

def trlan_topk(m: np.ndarray, cfg: EngineConfig) -> EngineReport:
    """Thick-restart Lanczos on the Gram matrix of the smaller side.

    Restarts retain the leading Ritz vectors; each Lanczos step applies the
    Gram operator once (2 matvecs).  New basis vectors are reorthogonalized
    against the whole active basis, which keeps restarted cycles stable and
    costs no matvecs.  Reported iterations count Lanczos steps.
    """
    start = time.perf_counter()
    m = as_matrix(m)
    k = cfg.k
    _check_rank(m, k)
    rng = np.random.default_rng(cfg.seed)
    counted = _CountedMatrix(m)
    rows, cols = m.shape

    # Primary side carries the Gram operator of the smaller dimension.
    if cols <= rows:
        gram_dim = cols
        gram = lambda x: counted.apply_t(counted.apply(x))
        apply_primary = counted.apply
    else:
        gram_dim = rows
        gram = lambda x: counted.apply(counted.apply_t(x))
        apply_primary = counted.apply_t

    d = cfg.subspace if cfg.subspace is not None else max(2 * k + 10, 20)
    d = min(d, gram_dim)
    max_steps = cfg.resolved_max_iters()

    basis = np.zeros((gram_dim, d))
    t_proj = np.zeros((d, d))
    size = 0          # current basis size
    steps = 0
    converged = False
    theta = s_small = None

    v = rng.standard_normal(gram_dim)
    v /= np.linalg.norm(v)
    beta = 0.0        # coupling of v to the last basis vector

    def reorthogonalize(w: np.ndarray) -> np.ndarray:
        for _ in range(2):
            w = w - basis[:, :size] @ (basis[:, :size].T @ w)
        return w

    scale_est = 0.0
    while True:
        # Lanczos steps until the basis is full or the step budget runs out.
        while size < d and steps < max_steps:
            basis[:, size] = v
            w = gram(v)
            steps += 1
            alpha = float(v @ w)
            t_proj[size, size] = alpha
            if size > 0:
                t_proj[size - 1, size] = t_proj[size, size - 1] = beta
            size += 1
            w = reorthogonalize(w)
            beta = float(np.linalg.norm(w))
            scale_est = max(scale_est, abs(alpha) + beta)
            if beta <= 1e-13 * max(scale_est, 1e-300):
                beta = 0.0
                if size >= gram_dim:
                    break  # Krylov space exhausted; the projection is exact
                # Invariant subspace found; restart from a fresh direction.
                v = _orthonormal_fill(list(basis[:, :size].T), gram_dim, rng)
            else:
                v = w / beta

        theta_all, s_all = np.linalg.eigh(t_proj[:size, :size])
        order = np.argsort(theta_all)[::-1]
        theta = np.clip(theta_all[order], 0.0, None)
        s_small = s_all[:, order]
        residuals = beta * np.abs(s_small[size - 1, :])
        top = theta[0]
        tol_scaled = cfg.tol * np.sqrt(top * theta) + np.finfo(float).eps * max(top, 1e-300)
        n_top = min(k, size)
        if np.all(residuals[:n_top] <= tol_scaled[:n_top]) or size >= gram_dim:
            converged = bool(np.all(residuals[:n_top] <= tol_scaled[:n_top]))
            break
        if steps >= max_steps:
            break

        # Thick restart: keep the leading Ritz vectors plus the residual vector.
        keep = min(k + (d - k) // 2, size - 2, d - 2)
        keep = max(keep, min(k, size - 2)) if size > 2 else 1
        retained = basis[:, :size] @ s_small[:, :keep]
        couplings = beta * s_small[size - 1, :keep]
        basis[:, :keep] = retained
        t_proj[:, :] = 0.0
        t_proj[:keep, :keep] = np.diag(theta[:keep])
        t_proj[keep, :keep] = couplings
        t_proj[:keep, keep] = couplings
        size = keep
        # v (the residual direction) becomes the next basis vector; its
        # arrowhead couplings are already recorded in t_proj.
        basis[:, size] = v
        w = gram(v)
        steps += 1
        alpha = float(v @ w)
        t_proj[size, size] = alpha
        size += 1
        w = reorthogonalize(w)
        beta = float(np.linalg.norm(w))
        if beta <= 1e-13 * max(scale_est, 1e-300):
            beta = 0.0
            if size < gram_dim:
                v = _orthonormal_fill(list(basis[:, :size].T), gram_dim, rng)
        else:
            v = w / beta

    n_out = min(k, size)
    primary = basis[:, :size] @ s_small[:, :n_out]
    sigma, secondary = _secondary_vectors(counted, primary, apply_primary, rng)
    if cols <= rows:
        factors = SvdFactors(u=secondary, sigma=sigma, v=primary)
    else:
        factors = SvdFactors(u=primary, sigma=sigma, v=secondary)
    return EngineReport(
        factors=factors,
        matvecs=counted.matvecs,
        iterations=steps,
        wall_time=time.perf_counter() - start,
        converged=converged,
    )


# --------------------------------------------------------------------------
# Newton-Schulz polar iteration
# --------------------------------------------------------------------------

def _spectral_estimate(counted: _CountedMatrix, rng: np.random.Generator, steps: int = 15) -> float:
    """Power-iteration estimate of the largest singular value (2 matvecs/step)."""
    v = rng.standard_normal(counted.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = counted.apply_t(counted.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    return float(est)


def newton_schulz_polar(m: np.ndarray, tol: float = 1e-7, max_iters: int = 100) -> PolarResult:
    """Orthogonal polar factor via the cubic iteration X <- 1.5 X - 0.5 X X^T X.

    The input is pre-scaled by a power-iteration estimate of its spectral norm,
    which makes already-orthogonal inputs fixed points.  Stops when the
    relative Frobenius change between successive iterates falls below tol.
    """
    m = as_matrix(m)
    if not np.any(m):
        raise ValueError("newton_schulz_polar requires a nonzero matrix")
    rng = np.random.default_rng(0)
    counted = _CountedMatrix(m)
    est = _spectral_estimate(counted, rng)
    if est == 0.0:
        est = float(np.linalg.norm(m))
    matvecs = counted.matvecs

    transposed = m.shape[0] < m.shape[1]
    x = (m.T if transposed else m) / est
    n_inner = x.shape[1]
    # The cubic map converges for singular values in (0, sqrt(3)); the estimate
    # can only undershoot slightly, so a blowup means it failed badly.
    blowup = 4.0 * n_inner

    iterations = 0
    converged = False
    frobenius_rescaled = False
    while iterations < max_iters:
        x_next = 1.5 * x - 0.5 * (x @ (x.T @ x))
        matvecs += 2 * n_inner
        iterations += 1
        norm_next = np.linalg.norm(x_next)
        if not np.isfinite(norm_next) or norm_next * norm_next > blowup:
            if frobenius_rescaled:
                break
            frobenius_rescaled = True
            x = (m.T if transposed else m) / np.linalg.norm(m)
            continue
        delta = np.linalg.norm(x_next - x) / max(norm_next, 1e-300)
        x = x_next
        if delta <= tol:
            converged = True
            break

    polar = x.T if transposed else x
    return PolarResult(polar=polar, iterations=iterations, matvecs=matvecs, converged=converged)


# --------------------------------------------------------------------------
# Error metrics and dispatch
# --------------------------------------------------------------------------

def approximation_errors(approx: SvdFactors, reference: SvdFactors, k: int) -> tuple[float, float]:
    """Relative Frobenius errors of the rank-k reconstructions.

    err1 compares the unweighted sums of u_i v_i^T, err2 the sigma-weighted
    sums.  Both are invariant to paired sign flips of the singular vectors.
    """
    if k > approx.rank or k > reference.rank:
        raise ValueError(f"k={k} exceeds stored rank ({approx.rank}, {reference.rank})")
    ref1 = reference.projector_sum(k)
    ref2 = reference.reconstruct(k)
    err1 = np.linalg.norm(approx.projector_sum(k) - ref1) / np.linalg.norm(ref1)
    err2 = np.linalg.norm(approx.reconstruct(k) - ref2) / np.linalg.norm(ref2)
    return float(err1), float(err2)


_TOPK_ENGINES = {
    "power": power_iteration_topk,
    "rsvd": randomized_svd_topk,
    "trlan": trlan_topk,
}


def compute_topk(m: np.ndarray, cfg: EngineConfig) -> EngineReport:
    """Run the configured truncated-SVD engine on a dense matrix."""
    if cfg.engine == "newton-schulz":
        raise ValueError("newton-schulz computes a polar factor, not singular triplets")
    return _TOPK_ENGINES[cfg.engine](m, cfg)
