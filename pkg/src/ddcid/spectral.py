"""Hessian spectral machinery: ordered eigendecompositions, inertia,
positive-part pseudoinverses and pivoted-QR Newton solves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class NoPositiveSubspaceError(ValueError):
    """The matrix has no positive eigenvalues; callers should fall back to
    gradient descent."""


class ZeroGradientError(ValueError):
    """Gradient is zero: the point is already critical."""


def default_zero_tolerance(eigenvalues: np.ndarray) -> float:
    """Threshold below which an eigenvalue counts as zero for inertia."""
    n = eigenvalues.size
    scale = float(np.max(np.abs(eigenvalues))) if n else 0.0
    return n * np.finfo(float).eps * max(1.0, scale)


@dataclass
class SpectralInfo:
    """Eigendecomposition of a symmetric matrix with descending eigenvalues
    and the inertia (n_plus, n_zero, n_minus) implied by ``zero_tolerance``."""

    eigenvalues: np.ndarray          # descending: lam[0] >= ... >= lam[n-1]
    eigenvectors: np.ndarray         # orthonormal columns aligned with eigenvalues
    inertia: tuple[int, int, int]
    zero_tolerance: float = field(default=0.0)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    @property
    def n_plus(self) -> int:
        return self.inertia[0]

    @property
    def n_zero(self) -> int:
        return self.inertia[1]

    @property
    def n_minus(self) -> int:
        return self.inertia[2]

    @property
    def is_positive_definite(self) -> bool:
        return self.n_plus == self.dimension

    @property
    def positive_vectors(self) -> np.ndarray:
        """Columns spanning the positive eigenspace (may be empty)."""
        return self.eigenvectors[:, : self.n_plus]

    @property
    def positive_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.n_plus]

    def largest(self) -> tuple[float, np.ndarray]:
        return float(self.eigenvalues[0]), self.eigenvectors[:, 0]

    def smallest(self) -> tuple[float, np.ndarray]:
        return float(self.eigenvalues[-1]), self.eigenvectors[:, -1]


def _require_symmetric(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {H.shape}")
    asym = np.max(np.abs(H - H.T)) if H.size else 0.0
    tol = np.sqrt(np.finfo(float).eps) * max(1.0, float(np.max(np.abs(H))) if H.size else 0.0)
    if asym > tol:
        raise NotSymmetricError(f"matrix asymmetry {asym:.3e} exceeds tolerance {tol:.3e}")
    return 0.5 * (H + H.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # Deterministic sign: first nonzero component of each eigenvector positive.
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        nonzero = np.nonzero(col)[0]
        if nonzero.size and col[nonzero[0]] < 0:
            vectors[:, j] = -col
    return vectors


def eigendecompose(H: np.ndarray, zero_tol: float | None = None) -> SpectralInfo:
    """Symmetric eigendecomposition with eigenvalues sorted descending.

    Eigenvalues with |lam| <= zero_tol are classified as zero when computing
    the inertia.  Rejects matrices that are not symmetric within tolerance.
    """
    sym = _require_symmetric(H)
    w, v = np.linalg.eigh(sym)
    eigenvalues = w[::-1].copy()
    eigenvectors = _fix_signs(v[:, ::-1].copy())
    if zero_tol is None:
        zero_tol = default_zero_tolerance(eigenvalues)
    n_plus = int(np.count_nonzero(eigenvalues > zero_tol))
    n_minus = int(np.count_nonzero(eigenvalues < -zero_tol))
    n_zero = eigenvalues.size - n_plus - n_minus
    return SpectralInfo(eigenvalues, eigenvectors, (n_plus, n_zero, n_minus), zero_tol)


def positive_part_pseudoinverse(s: SpectralInfo) -> np.ndarray:
    """Pseudoinverse of the positive part: V_plus diag(1/lam_plus) V_plus^T.

    This is the Moore-Penrose inverse of the closest positive semidefinite
    matrix; raises NoPositiveSubspaceError when there are no positive
    eigenvalues.
    """
    if s.n_plus == 0:
        raise NoPositiveSubspaceError("matrix has no positive eigenvalues")
    v_plus = s.positive_vectors
    return (v_plus / s.positive_eigenvalues) @ v_plus.T


def newton_solve(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve H v = rhs via QR with column pivoting.

    A rank-deficient H (trailing ~zero diagonal of R) yields the minimum-norm
    solution of the consistent part of the system.
    """
    H = np.asarray(H, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = H.shape[0]
    q, r, perm = scipy.linalg.qr(H, pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(n)
    rank = int(np.count_nonzero(diag > n * np.finfo(float).eps * diag[0]))
    c = q.T @ rhs
    if rank == n:
        z = scipy.linalg.solve_triangular(r, c)
    else:
        # Minimum-norm solution of the consistent rows R[:rank] z = c[:rank].
        z, *_ = scipy.linalg.lstsq(r[:rank, :], c[:rank])
    out = np.empty(n)
    out[perm] = z
    return out


def extremal_eigenpairs(H: np.ndarray) -> tuple[tuple[float, np.ndarray], tuple[float, np.ndarray]]:
    """Largest and smallest eigenpairs, consistent with eigendecompose.

    Kept as a separate entry point so an iterative backend can replace the
    dense decomposition without touching callers.
    """
    s = eigendecompose(H)
    return s.largest(), s.smallest()


def alignment_ratio(s: SpectralInfo, grad: np.ndarray) -> float:
    """Fraction of the gradient lying in the positive eigenspace:
    ||V_plus^T grad|| / ||grad||, in [0, 1]."""
    grad = np.asarray(grad, dtype=float)
    norm = np.linalg.norm(grad)
    if norm == 0.0:
        raise ZeroGradientError("gradient is zero; the point is already critical")
    if s.n_plus == 0:
        return 0.0
    return float(np.linalg.norm(s.positive_vectors.T @ grad) / norm)
