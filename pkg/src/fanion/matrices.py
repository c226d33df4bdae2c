"""Dense matrix primitives: inner product, exact SVD, seeded random generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Matrices are plain 2-D float64 arrays throughout the package.
# Seed arguments accept anything np.random.default_rng does (ints, Generators).
Matrix = np.ndarray


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce input to a validated 2-D float64 array.

    Raises ValueError on wrong dimensionality or non-finite entries.
    """
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Standard matrix dot product sum_ij a_ij * b_ij."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


@dataclass(frozen=True)
class SvdFactors:
    """Truncated singular factors (U, sigma, V) with orthonormal columns.

    u is m-by-k, v is n-by-k, sigma has length k and is sorted nonincreasing.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    def truncate(self, k: int) -> "SvdFactors":
        if not 1 <= k <= self.rank:
            raise ValueError(f"k={k} out of range for rank {self.rank}")
        return SvdFactors(self.u[:, :k], self.sigma[:k], self.v[:, :k])

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        """Weighted reconstruction sum_i sigma_i u_i v_i^T of the leading k triplets."""
        k = self.rank if k is None else k
        return (self.u[:, :k] * self.sigma[:k]) @ self.v[:, :k].T

    def projector_sum(self, k: int | None = None) -> np.ndarray:
        """Unweighted sum_i u_i v_i^T of the leading k triplets."""
        k = self.rank if k is None else k
        return self.u[:, :k] @ self.v[:, :k].T

    def orthonormality_defect(self) -> float:
        """Max Frobenius deviation of u^T u and v^T v from the identity."""
        eye = np.eye(self.rank)
        du = np.linalg.norm(self.u.T @ self.u - eye)
        dv = np.linalg.norm(self.v.T @ self.v - eye)
        return max(du, dv)


def exact_svd(m: np.ndarray) -> SvdFactors:
    """Full SVD of a dense matrix via LAPACK, as the ground-truth oracle.

    Returns min(rows, cols) triplets with sigma sorted nonincreasing.
    """
    m = as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdFactors(u=u, sigma=s, v=vt.T)


def random_gaussian(rows: int, cols: int, std: float, seed) -> np.ndarray:
    """Matrix with i.i.d. N(0, std^2) entries, deterministic per seed."""
    if std <= 0:
        raise ValueError(f"std must be > 0, got {std}")
    rng = np.random.default_rng(seed)
    return std * rng.standard_normal((rows, cols))


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed R diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    # Fixing the sign of diag(R) makes the QR factorization unique, hence Haar.
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_psd_uniform_spectrum(n: int, seed) -> np.ndarray:
    """Symmetric PSD matrix Q diag(lam) Q^T with lam_i ~ Uniform(0, 1) and Haar Q."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    q = haar_orthogonal(n, rng)
    lam = rng.uniform(0.0, 1.0, size=n)
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)  # re-symmetrize rounding noise
