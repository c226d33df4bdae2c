"""Linear minimization oracles over matrix-norm balls, their conic
combinations, and the momentum-wrapped optimizer step.

Every oracle returns the ascent direction D* maximizing <M, D> over its unit
ball, so a step is always X <- X - lr * D*.  The inner product <M, D*> then
equals the dual norm of M for the ball in question.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .engines import EngineConfig, compute_topk, newton_schulz_polar
from .matrices import SvdFactors, as_matrix, exact_svd, frobenius_inner


# --------------------------------------------------------------------------
# Oracle variants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Nsgd:
    """Frobenius ball: D* = M / ||M||_F."""


@dataclass(frozen=True)
class Muon:
    """Spectral ball: D* = U V^T, the orthogonal polar factor.

    The sqrt(m/n) RMS scaling some trainers apply is intentionally excluded;
    multiply the step size if you need it.
    """


@dataclass(frozen=True)
class SignSgd:
    """Chebyshev ball: D* = sign(M) elementwise, with sign(0) = 0."""


@dataclass(frozen=True)
class Neon:
    """Nuclear ball: D* = u_1 v_1^T, the top singular pair."""


@dataclass(frozen=True)
class Fanion:
    """Dual Ky Fan k ball: D* = sum of the top-k u_i v_i^T."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class KyFanPrimal:
    """Ky Fan k ball: D* is u_1 v_1^T or (1/k) U V^T, whichever wins the
    inner product; ties go to the scaled full-rank branch."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Schatten:
    """Schatten-p ball: D* = U diag(s_i^(q-1)) V^T / (sum s_i^q)^((q-1)/q)
    with 1/p + 1/q = 1.  p = 1 degenerates to the Neon direction; p must be
    finite (the p -> infinity limit is Muon)."""

    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise ValueError(f"p must be finite and >= 1, got {self.p}")


@dataclass(frozen=True)
class Combination:
    """Conic combination sum_i w_i * LMO_i, itself the LMO of the ball dual
    to the weighted sum of the component dual norms.

    Negative weights are tolerated with a warning so the pathological
    alpha > 1 blends remain expressible, but the constraint region is then no
    longer a norm ball and the conic-combination identity does not apply.
    """

    terms: tuple

    def __post_init__(self):
        for weight, variant in self.terms:
            if not np.isfinite(weight):
                raise ValueError(f"weights must be finite, got {weight}")
            if weight < 0:
                warnings.warn(
                    f"negative combination weight {weight}: not a conic combination",
                    stacklevel=2,
                )
            if not isinstance(variant, _VARIANT_TYPES):
                raise TypeError(f"not an LMO variant: {variant!r}")


LmoVariant = Union[Nsgd, Muon, SignSgd, Neon, Fanion, KyFanPrimal, Schatten, Combination]
_VARIANT_TYPES = (Nsgd, Muon, SignSgd, Neon, Fanion, KyFanPrimal, Schatten, Combination)


@dataclass(frozen=True)
class LmoSpec:
    """An oracle variant plus the SVD backend evaluating it.

    svd_backend=None means exact LAPACK SVD.  An EngineConfig routes Neon and
    Fanion through the configured iterative engine (with k taken from the
    variant) and Muon through Newton-Schulz when that engine is selected;
    Schatten and KyFanPrimal need the full spectrum and always use exact SVD.
    """

    variant: LmoVariant
    svd_backend: EngineConfig | None = None


def _coerce_spec(spec) -> LmoSpec:
    if isinstance(spec, LmoSpec):
        return spec
    if isinstance(spec, _VARIANT_TYPES):
        return LmoSpec(variant=spec)
    raise TypeError(f"not an LMO spec or variant: {spec!r}")


def f_fanion_spec(k: int, alpha: float) -> LmoSpec:
    """Blend of Fanion(k) with weight alpha and normalized SGD with 1 - alpha."""
    _check_alpha(alpha)
    return LmoSpec(Combination(((alpha, Fanion(k)), (1.0 - alpha, Nsgd()))))


def s_fanion_spec(k: int, alpha: float, eta: float) -> LmoSpec:
    """Blend of Fanion(k) with weight alpha and sign descent with (1 - alpha) * eta."""
    _check_alpha(alpha)
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return LmoSpec(Combination(((alpha, Fanion(k)), ((1.0 - alpha) * eta, SignSgd()))))


def _check_alpha(alpha: float) -> None:
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha > 1:
        warnings.warn(
            f"alpha={alpha} > 1: the constraint region is no longer a norm ball",
            stacklevel=3,
        )


# --------------------------------------------------------------------------
# Oracle evaluation
# --------------------------------------------------------------------------

def _check_k(k: int, m: np.ndarray) -> None:
    if k > min(m.shape):
        raise ValueError(f"k={k} out of range [1, {min(m.shape)}] for shape {m.shape}")


def _nonzero(m: np.ndarray, who: str) -> None:
    if not np.any(m):
        raise ValueError(f"{who} requires a nonzero matrix")


def _topk_factors(m: np.ndarray, k: int, backend: EngineConfig | None) -> SvdFactors:
    if backend is None:
        return exact_svd(m).truncate(k)
    subspace = backend.subspace
    if subspace is not None and subspace < k + 2:
        subspace = None
    cfg = replace(backend, k=k, subspace=subspace)
    return compute_topk(m, cfg).factors


def _polar_factor(m: np.ndarray, backend: EngineConfig | None) -> np.ndarray:
    """Orthogonal polar factor U V^T.

    The exact path diagonalizes the Gram matrix of the smaller side, which is
    roughly twice as fast as a full SVD at equal (LAPACK double) accuracy;
    eigenvalues below a relative floor fall back to the SVD route, where the
    orthonormal completion is better conditioned.
    """
    if backend is not None and backend.engine == "newton-schulz":
        return newton_schulz_polar(m, tol=backend.tol, max_iters=backend.resolved_max_iters()).polar
    transposed = m.shape[0] < m.shape[1]
    a = m.T if transposed else m
    lam, vecs = np.linalg.eigh(a.T @ a)
    if lam[-1] <= 0.0:
        return np.zeros_like(m)
    if lam[0] <= 1e-12 * lam[-1]:
        f = exact_svd(m)
        return f.u @ f.v.T
    polar = a @ (vecs * (1.0 / np.sqrt(lam))) @ vecs.T
    return polar.T if transposed else polar


def _schatten_direction(m: np.ndarray, p: float) -> np.ndarray:
    _nonzero(m, "Schatten")
    f = exact_svd(m)
    if p == 1.0:
        return np.outer(f.u[:, 0], f.v[:, 0])
    q = p / (p - 1.0)
    # Work with singular values scaled by the largest so huge q stays finite.
    r = f.sigma / f.sigma[0]
    weights = np.where(r > 0, r ** (q - 1.0), 0.0)
    denom = float(np.sum(np.where(r > 0, r**q, 0.0))) ** ((q - 1.0) / q)
    return (f.u * (weights / denom)) @ f.v.T


def lmo_evaluate(m, spec) -> np.ndarray:
    """Direction D* = argmax_{D in ball} <M, D> for the given oracle."""
    spec = _coerce_spec(spec)
    m = as_matrix(m)
    variant = spec.variant
    backend = spec.svd_backend

    if isinstance(variant, Nsgd):
        _nonzero(m, "NSGD")
        return m / np.linalg.norm(m)
    if isinstance(variant, SignSgd):
        return np.sign(m)
    if isinstance(variant, Muon):
        return _polar_factor(m, backend)
    if isinstance(variant, Neon):
        f = _topk_factors(m, 1, backend)
        return np.outer(f.u[:, 0], f.v[:, 0])
    if isinstance(variant, Fanion):
        _check_k(variant.k, m)
        if variant.k == min(m.shape):
            return _polar_factor(m, backend)
        f = _topk_factors(m, variant.k, backend)
        return f.projector_sum(variant.k)
    if isinstance(variant, KyFanPrimal):
        _check_k(variant.k, m)
        f = exact_svd(m)
        if f.sigma[0] > np.sum(f.sigma) / variant.k:
            return np.outer(f.u[:, 0], f.v[:, 0])
        return f.projector_sum() / variant.k
    if isinstance(variant, Schatten):
        return _schatten_direction(m, variant.p)
    if isinstance(variant, Combination):
        out = np.zeros_like(m)
        for weight, term in variant.terms:
            if weight == 0.0:
                continue
            out += weight * lmo_evaluate(m, LmoSpec(term, backend))
        return out
    raise TypeError(f"unknown LMO variant: {variant!r}")


def support_value(m, spec) -> float:
    """<M, D*>: the dual-norm value the oracle direction attains."""
    return frobenius_inner(as_matrix(m), lmo_evaluate(m, spec))


# --------------------------------------------------------------------------
# Momentum and the update loop
# --------------------------------------------------------------------------

MOMENTUM_MODES = ("none", "heavy-ball", "nesterov")


@dataclass
class OptimizerState:
    """Iterate, momentum buffer, and step counter for one matrix parameter.

    mode 'nesterov' is the approximate variant: the effective direction is the
    current gradient plus beta times the freshly updated buffer, not a true
    lookahead gradient.
    """

    x: np.ndarray
    b: np.ndarray
    beta: float = 0.9
    mode: str = "nesterov"
    step: int = 0

    def __post_init__(self):
        if self.x.shape != self.b.shape:
            raise ValueError(f"shape mismatch: x {self.x.shape} vs b {self.b.shape}")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.mode not in MOMENTUM_MODES:
            raise ValueError(f"mode must be one of {MOMENTUM_MODES}, got {self.mode!r}")


def init_state(x0, beta: float = 0.9, mode: str = "nesterov") -> OptimizerState:
    x0 = as_matrix(x0)
    return OptimizerState(x=x0, b=np.zeros_like(x0), beta=beta, mode=mode)


def momentum_direction(state: OptimizerState, grad) -> tuple[np.ndarray, OptimizerState]:
    """Update the momentum buffer and return the effective direction.

    The buffer always becomes the exponential average beta * B + (1 - beta) * G.
    Mode 'none' returns G and 'heavy-ball' the fresh buffer.  Mode 'nesterov'
    returns G + (beta / (1 - beta)) * B: expressed with the normalized buffer,
    this is the same direction (up to positive scale, which the oracles ignore)
    as the undampened-buffer Nesterov step standard trainers implement.
    """
    grad = as_matrix(grad)
    if grad.shape != state.x.shape:
        raise ValueError(f"shape mismatch: grad {grad.shape} vs x {state.x.shape}")
    b_new = state.beta * state.b + (1.0 - state.beta) * grad
    if state.mode == "none":
        m_eff = grad
    elif state.mode == "heavy-ball":
        m_eff = b_new
    elif state.beta == 0.0:
        m_eff = grad
    else:
        m_eff = grad + (state.beta / (1.0 - state.beta)) * b_new
    new_state = replace(state, b=b_new, step=state.step + 1)
    return m_eff, new_state


def optimizer_step(state: OptimizerState, grad, lr: float, spec) -> OptimizerState:
    """One update X <- X - lr * LMO(effective direction)."""
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    m_eff, new_state = momentum_direction(state, grad)
    if lr == 0.0:
        return new_state
    direction = lmo_evaluate(m_eff, spec)
    return replace(new_state, x=state.x - lr * direction)


# --------------------------------------------------------------------------
# Text forms (CLI)
# --------------------------------------------------------------------------

_SIMPLE_VARIANTS = {
    "nsgd": Nsgd(),
    "muon": Muon(),
    "signsgd": SignSgd(),
    "neon": Neon(),
}


def _params(body: str, spec: dict) -> dict:
    out = {}
    for item in body.split(","):
        if "=" not in item:
            raise ValueError(f"malformed parameter {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in spec:
            raise ValueError(f"unknown parameter {key!r}")
        out[key] = spec[key](value)
    missing = set(spec) - set(out)
    if missing:
        raise ValueError(f"missing parameters: {sorted(missing)}")
    return out


def parse_lmo_spec(text: str) -> LmoSpec:
    """Parse the canonical textual form: 'muon', 'neon', 'nsgd', 'signsgd',
    'fanion:k=10', 'kyfan-primal:k=2', 'schatten:p=4',
    'f-fanion:k=500,alpha=0.5', 's-fanion:k=500,alpha=0.5,eta=0.01'."""
    text = text.strip().lower()
    if text in _SIMPLE_VARIANTS:
        return LmoSpec(_SIMPLE_VARIANTS[text])
    head, sep, body = text.partition(":")
    if not sep:
        raise ValueError(f"unknown LMO spec {text!r}")
    if head == "fanion":
        return LmoSpec(Fanion(**_params(body, {"k": int})))
    if head == "kyfan-primal":
        return LmoSpec(KyFanPrimal(**_params(body, {"k": int})))
    if head == "schatten":
        return LmoSpec(Schatten(**_params(body, {"p": float})))
    if head == "f-fanion":
        kw = _params(body, {"k": int, "alpha": float})
        return f_fanion_spec(kw["k"], kw["alpha"])
    if head == "s-fanion":
        kw = _params(body, {"k": int, "alpha": float, "eta": float})
        return s_fanion_spec(kw["k"], kw["alpha"], kw["eta"])
    raise ValueError(f"unknown LMO spec {text!r}")


def format_lmo_spec(spec) -> str:
    spec = _coerce_spec(spec)
    v = spec.variant
    if isinstance(v, Nsgd):
        return "nsgd"
    if isinstance(v, Muon):
        return "muon"
    if isinstance(v, SignSgd):
        return "signsgd"
    if isinstance(v, Neon):
        return "neon"
    if isinstance(v, Fanion):
        return f"fanion:k={v.k}"
    if isinstance(v, KyFanPrimal):
        return f"kyfan-primal:k={v.k}"
    if isinstance(v, Schatten):
        return f"schatten:p={v.p:g}"
    if isinstance(v, Combination):
        if len(v.terms) == 2:
            (w1, t1), (w2, t2) = v.terms
            if isinstance(t1, Fanion) and isinstance(t2, Nsgd) and abs(w1 + w2 - 1.0) < 1e-12:
                return f"f-fanion:k={t1.k},alpha={w1:g}"
            if isinstance(t1, Fanion) and isinstance(t2, SignSgd) and w1 < 1.0:
                eta = w2 / (1.0 - w1)
                return f"s-fanion:k={t1.k},alpha={w1:g},eta={eta:g}"
        parts = " + ".join(f"{w:g}*{format_lmo_spec(LmoSpec(t))}" for w, t in v.terms)
        return f"combination({parts})"
    raise TypeError(f"unknown LMO variant: {v!r}")
