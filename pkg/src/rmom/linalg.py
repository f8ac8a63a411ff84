"""Dense symmetric linear algebra kernels.

Eigendecomposition and spectral matrix functions (exp, log, sqrt, inverse
sqrt) for real symmetric matrices, on top of LAPACK via ``numpy.linalg``.
Every matrix-function result is explicitly re-symmetrized to guard against
round-off drift.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

SYMMETRY_ATOL = 1e-12


class MatrixDomainError(ValueError):
    """Spectral function evaluated outside its domain (e.g. log of a
    matrix with a nonpositive eigenvalue)."""


class EigDecomp(NamedTuple):
    """Eigendecomposition M = V diag(w) V^T with ``w`` ascending and ``V``
    orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M^T)/2."""
    return 0.5 * (m + m.T)


def check_symmetric(m: np.ndarray, atol: float = SYMMETRY_ATOL) -> np.ndarray:
    """Validate that ``m`` is a finite, square, symmetric matrix.

    Raises with a diagnostic otherwise; returns ``m`` as a float64 array.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixDomainError("matrix contains non-finite entries")
    skew = np.max(np.abs(m - m.T)) if m.size else 0.0
    if skew > atol:
        raise ValueError(f"matrix is not symmetric: max |M - M^T| = {skew:.3e}")
    return m


def sym_eig(m: np.ndarray) -> EigDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Deterministic for identical input bytes (LAPACK dsyevd path).
    """
    m = check_symmetric(m)
    w, v = np.linalg.eigh(m)
    return EigDecomp(w, v)


def spd_apply(
    m: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray],
    *,
    require_positive: bool = False,
    fn_name: str = "fn",
) -> np.ndarray:
    """Apply a scalar function to the spectrum: V diag(fn(w)) V^T.

    With ``require_positive`` the smallest eigenvalue must be > 0,
    otherwise a MatrixDomainError names the offending eigenvalue.
    """
    w, v = sym_eig(m)
    if require_positive and w[0] <= 0.0:
        raise MatrixDomainError(
            f"{fn_name} requires positive eigenvalues; smallest is {w[0]:.6e}"
        )
    return symmetrize((v * fn(w)) @ v.T)


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix."""
    return spd_apply(m, np.exp, fn_name="expm")


def logm(m: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a symmetric positive definite matrix."""
    return spd_apply(m, np.log, require_positive=True, fn_name="logm")


def sqrtm(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive definite matrix."""
    return spd_apply(m, np.sqrt, require_positive=True, fn_name="sqrtm")


def invsqrtm(m: np.ndarray) -> np.ndarray:
    """Inverse symmetric square root of an SPD matrix."""
    return spd_apply(
        m, lambda w: 1.0 / np.sqrt(w), require_positive=True, fn_name="invsqrtm"
    )
