"""Matrix norms: Frobenius, spectral, nuclear, Chebyshev, entrywise-l1, Ky Fan k
and its dual, the conic-combination norms, and the unit-ball boundary sampler in
singular-value space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .matrices import as_matrix


# --------------------------------------------------------------------------
# Norm kinds (tagged union; parsed from CLI text forms)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Frobenius:
    pass


@dataclass(frozen=True)
class Spectral:
    pass


@dataclass(frozen=True)
class Nuclear:
    pass


@dataclass(frozen=True)
class Chebyshev:
    pass


@dataclass(frozen=True)
class EntrywiseL1:
    pass


@dataclass(frozen=True)
class KyFan:
    k: int


@dataclass(frozen=True)
class KyFanDual:
    k: int


@dataclass(frozen=True)
class FrobeniusKyFan:
    """alpha * KyFan(k) + (1 - alpha) * Frobenius."""

    k: int
    alpha: float


@dataclass(frozen=True)
class ChebyshevKyFan:
    """alpha * KyFan(k) + ((1 - alpha) / eta) * entrywise-l1 (the Chebyshev dual)."""

    k: int
    alpha: float
    eta: float


NormKind = Union[
    Frobenius, Spectral, Nuclear, Chebyshev, EntrywiseL1,
    KyFan, KyFanDual, FrobeniusKyFan, ChebyshevKyFan,
]


# --------------------------------------------------------------------------
# Scalar norm evaluation
# --------------------------------------------------------------------------

def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values of m, sorted nonincreasing."""
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64)))


def spectral_norm(m) -> float:
    return float(singular_values(m)[0])


def nuclear_norm(m) -> float:
    return float(np.sum(singular_values(m)))


def chebyshev_norm(m) -> float:
    return float(np.max(np.abs(np.asarray(m, dtype=np.float64))))


def entrywise_l1_norm(m) -> float:
    return float(np.sum(np.abs(np.asarray(m, dtype=np.float64))))


def _check_k(k: int, m: np.ndarray) -> None:
    limit = min(m.shape)
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} out of range [1, {limit}] for shape {m.shape}")


def ky_fan_norm(m, k: int) -> float:
    """Sum of the k largest singular values."""
    m = as_matrix(m)
    _check_k(k, m)
    return float(np.sum(singular_values(m)[:k]))


def ky_fan_dual_norm(m, k: int) -> float:
    """Dual of the Ky Fan k-norm: max(nuclear / k, spectral)."""
    m = as_matrix(m)
    _check_k(k, m)
    s = singular_values(m)
    return float(max(np.sum(s) / k, s[0]))


def norm_eval(m, kind: NormKind) -> float:
    """Evaluate any supported norm of a dense matrix."""
    m = as_matrix(m)
    if isinstance(kind, Frobenius):
        return frobenius_norm(m)
    if isinstance(kind, Spectral):
        return spectral_norm(m)
    if isinstance(kind, Nuclear):
        return nuclear_norm(m)
    if isinstance(kind, Chebyshev):
        return chebyshev_norm(m)
    if isinstance(kind, EntrywiseL1):
        return entrywise_l1_norm(m)
    if isinstance(kind, KyFan):
        return ky_fan_norm(m, kind.k)
    if isinstance(kind, KyFanDual):
        return ky_fan_dual_norm(m, kind.k)
    if isinstance(kind, FrobeniusKyFan):
        a = kind.alpha
        return a * ky_fan_norm(m, kind.k) + (1.0 - a) * frobenius_norm(m)
    if isinstance(kind, ChebyshevKyFan):
        a, eta = kind.alpha, kind.eta
        return a * ky_fan_norm(m, kind.k) + ((1.0 - a) / eta) * entrywise_l1_norm(m)
    raise TypeError(f"unknown norm kind: {kind!r}")


def ky_fan_diag3_closed_form(x: float, y: float, z: float) -> tuple[float, float]:
    """Closed forms for diag(x, y, z): the top-2 norm and its dual.

    primal = max over pairwise sums of absolute values,
    dual   = max(largest absolute value, half the total absolute sum).
    """
    ax, ay, az = abs(x), abs(y), abs(z)
    primal = max(ax + ay, ax + az, ay + az)
    dual = max(ax, ay, az, (ax + ay + az) / 2.0)
    return primal, dual


# --------------------------------------------------------------------------
# Unit-ball boundary sampling in singular-value space
# --------------------------------------------------------------------------

# Norms that are symmetric gauge functions of the singular values; only these
# have meaningful unit balls in (sigma_1, ..., sigma_d) space at any dimension.
_SPECTRAL_KINDS = (Frobenius, Spectral, Nuclear, KyFan, KyFanDual, FrobeniusKyFan)

# Closed-form dual partners used by the dual-ball sampler where available.
_DUAL_PARTNERS = {
    Frobenius: lambda kind: Frobenius(),
    Spectral: lambda kind: Nuclear(),
    Nuclear: lambda kind: Spectral(),
    KyFan: lambda kind: KyFanDual(kind.k),
    KyFanDual: lambda kind: KyFan(kind.k),
    Chebyshev: lambda kind: EntrywiseL1(),
    EntrywiseL1: lambda kind: Chebyshev(),
}


def _sphere_directions(dims: int, resolution: int) -> np.ndarray:
    """Uniform direction grid: equispaced angles in 2-D, Fibonacci lattice in 3-D."""
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if dims == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dims == 3:
        i = np.arange(resolution, dtype=np.float64)
        golden = (1.0 + np.sqrt(5.0)) / 2.0
        z = 1.0 - 2.0 * (i + 0.5) / resolution
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = 2.0 * np.pi * i / golden
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError(f"dims must be 2 or 3, got {dims}")


def _check_representable(kind: NormKind, dims: int) -> None:
    if isinstance(kind, _SPECTRAL_KINDS):
        return
    # Entrywise norms are not functions of singular values alone; the diagonal
    # parameterization only matches the textbook picture in two dimensions.
    if dims <= 2:
        return
    raise ValueError(
        f"{format_norm_kind(kind)} is not representable in {dims}-D singular-value space"
    )


def _kind_k(kind: NormKind, dims: int) -> None:
    k = getattr(kind, "k", None)
    if k is not None and not 1 <= k <= dims:
        raise ValueError(f"k={k} out of range [1, {dims}] for {dims}-D sampling")


def _top_k_sign(u: np.ndarray, k: int) -> np.ndarray:
    """Support point of the unit ball of the Ky Fan dual norm: sign on the k
    largest absolute coordinates, zero elsewhere."""
    out = np.zeros_like(u)
    idx = np.argsort(-np.abs(u))[:k]
    out[idx] = np.sign(u[idx])
    return out


def _dual_support_point(u: np.ndarray, kind: NormKind) -> np.ndarray:
    """Boundary point of the dual ball of `kind` in direction u, via the
    Minkowski-sum decomposition of dual balls of conic combinations."""
    if isinstance(kind, FrobeniusKyFan):
        a = kind.alpha
        return a * _top_k_sign(u, kind.k) + (1.0 - a) * (u / np.linalg.norm(u))
    if isinstance(kind, ChebyshevKyFan):
        a, eta = kind.alpha, kind.eta
        return a * _top_k_sign(u, kind.k) + ((1.0 - a) / eta) * np.sign(u)
    raise TypeError(f"no Minkowski dual-ball rule for {kind!r}")


def ball_boundary_samples(
    kind: NormKind,
    dims: int,
    resolution: int,
    scale: float = 1.0,
    dual: bool = False,
) -> np.ndarray:
    """Points on the boundary of the norm ball of radius `scale`, parameterized
    by singular values.

    With dual=False each emitted point p satisfies norm_eval(diag(p), kind) ==
    scale (radial scaling of a uniform direction grid).  With dual=True the
    boundary of the dual ball is produced: via the closed-form dual norm when
    one exists, otherwise (for the conic-combination kinds) as the Minkowski
    sum of scaled component dual balls, sampled by support functions.
    """
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    _check_representable(kind, dims)
    _kind_k(kind, dims)
    dirs = _sphere_directions(dims, resolution)

    if dual:
        partner = _DUAL_PARTNERS.get(type(kind))
        if partner is not None:
            return ball_boundary_samples(partner(kind), dims, resolution, scale)
        return scale * np.array([_dual_support_point(u, kind) for u in dirs])

    radii = np.array([norm_eval(np.diag(u), kind) for u in dirs])
    return scale * dirs / radii[:, None]


# --------------------------------------------------------------------------
# Text forms (CLI)
# --------------------------------------------------------------------------

_SIMPLE_KINDS = {
    "frobenius": Frobenius(),
    "fro": Frobenius(),
    "spectral": Spectral(),
    "nuclear": Nuclear(),
    "chebyshev": Chebyshev(),
    "l1": EntrywiseL1(),
}


def _parse_params(body: str, spec: dict) -> dict:
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


def parse_norm_kind(text: str) -> NormKind:
    """Parse the textual norm form, e.g. 'nuclear', 'kyfan:k=2',
    'f-kyfan:k=2,alpha=0.5', 'c-kyfan:k=2,alpha=0.5,eta=0.01'."""
    text = text.strip().lower()
    if text in _SIMPLE_KINDS:
        return _SIMPLE_KINDS[text]
    head, sep, body = text.partition(":")
    if not sep:
        raise ValueError(f"unknown norm kind {text!r}")
    if head == "kyfan":
        return KyFan(**_parse_params(body, {"k": int}))
    if head == "kyfan-dual":
        return KyFanDual(**_parse_params(body, {"k": int}))
    if head == "f-kyfan":
        return FrobeniusKyFan(**_parse_params(body, {"k": int, "alpha": float}))
    if head == "c-kyfan":
        return ChebyshevKyFan(
            **_parse_params(body, {"k": int, "alpha": float, "eta": float})
        )
    raise ValueError(f"unknown norm kind {text!r}")


def format_norm_kind(kind: NormKind) -> str:
    if isinstance(kind, Frobenius):
        return "frobenius"
    if isinstance(kind, Spectral):
        return "spectral"
    if isinstance(kind, Nuclear):
        return "nuclear"
    if isinstance(kind, Chebyshev):
        return "chebyshev"
    if isinstance(kind, EntrywiseL1):
        return "l1"
    if isinstance(kind, KyFan):
        return f"kyfan:k={kind.k}"
    if isinstance(kind, KyFanDual):
        return f"kyfan-dual:k={kind.k}"
    if isinstance(kind, FrobeniusKyFan):
        return f"f-kyfan:k={kind.k},alpha={kind.alpha:g}"
    if isinstance(kind, ChebyshevKyFan):
        return f"c-kyfan:k={kind.k},alpha={kind.alpha:g},eta={kind.eta:g}"
    raise TypeError(f"unknown norm kind: {kind!r}")
