"""Dense linear-algebra kernels.

Thin wrappers over LAPACK (via numpy/scipy) that pin down the semantics the
fitting code relies on: SVD-based minimal-norm least squares with an explicit
rank tolerance, pseudoinverses with the same tolerance, general eigenpairs,
upper Cholesky factors, and square solves with a clear error taxonomy.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .exceptions import (
    NoConvergenceError,
    NonFiniteError,
    NotPositiveDefiniteError,
    RankDeficientWarning,
    ShapeMismatchError,
    SingularMatrixError,
)

__all__ = [
    "default_rank_tol",
    "lstsq_minnorm",
    "pinv",
    "eig_general",
    "cholesky_upper",
    "solve_dense",
]


def _check_finite(name: str, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return a


def default_rank_tol(sigma: np.ndarray, shape: tuple[int, int]) -> float:
    """Singular-value cutoff: max(m, n) * eps * sigma_max."""
    if sigma.size == 0:
        return 0.0
    return max(shape) * np.finfo(np.float64).eps * float(sigma[0])


def lstsq_minnorm(
    a: np.ndarray,
    b: np.ndarray,
    rank_tol: float | None = None,
    warn_deficient: bool = False,
):
    """Minimal-norm least-squares solution of a x ~= b via SVD.

    Parameters
    ----------
    a : (m, n) array
    b : (m,) or (m, k) array
    rank_tol : absolute singular-value cutoff; default max(m,n)*eps*sigma_max.
    warn_deficient : emit RankDeficientWarning when effective rank < n.

    Returns
    -------
    x : minimal-norm solution.
    rank : effective numerical rank.
    """
    a = _check_finite("a", np.asarray(a))
    b = _check_finite("b", np.asarray(b))
    if a.ndim != 2 or b.shape[0] != a.shape[0]:
        raise ShapeMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    u, sigma, vh = np.linalg.svd(a, full_matrices=False)
    tol = default_rank_tol(sigma, a.shape) if rank_tol is None else float(rank_tol)
    keep = sigma > tol
    rank = int(np.count_nonzero(keep))
    if warn_deficient and rank < a.shape[1]:
        warnings.warn(
            f"least-squares system has rank {rank} < {a.shape[1]}",
            RankDeficientWarning,
            stacklevel=2,
        )
    ut_b = u.conj().T @ b
    scaled = np.zeros_like(ut_b)
    factor = sigma[keep] if b.ndim == 1 else sigma[keep][:, None]
    scaled[keep] = ut_b[keep] / factor
    x = vh.conj().T @ scaled
    return x, rank


def pinv(a: np.ndarray, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the shared rank-tolerance rule."""
    a = _check_finite("a", np.asarray(a))
    if a.ndim != 2:
        raise ShapeMismatchError("pinv expects a matrix")
    u, sigma, vh = np.linalg.svd(a, full_matrices=False)
    tol = default_rank_tol(sigma, a.shape) if rank_tol is None else float(rank_tol)
    inv = np.where(sigma > tol, 1.0 / np.where(sigma > tol, sigma, 1.0), 0.0)
    return (vh.conj().T * inv) @ u.conj().T


def eig_general(a: np.ndarray):
    """Eigenvalues and right eigenvectors of a general square matrix."""
    a = _check_finite("a", np.asarray(a))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatchError("eig_general expects a square matrix")
    try:
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return values, vectors


def cholesky_upper(g: np.ndarray) -> np.ndarray:
    """Upper-triangular factor R with R^H R = G for Hermitian positive definite G."""
    g = _check_finite("g", np.asarray(g))
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeMismatchError("cholesky_upper expects a square matrix")
    scale = np.max(np.abs(g)) if g.size else 0.0
    if not np.allclose(g, g.conj().T, atol=1e-10 * max(scale, 1.0)):
        raise NotPositiveDefiniteError("matrix is not Hermitian")
    try:
        return scipy.linalg.cholesky(g, lower=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for square a, raising SingularMatrixError when degenerate."""
    a = _check_finite("a", np.asarray(a))
    b = _check_finite("b", np.asarray(b))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise ShapeMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    try:
        x = scipy.linalg.solve(a, b)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    except ValueError as exc:
        # scipy raises ValueError for exactly singular triangular factors
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution contains non-finite entries")
    return x
