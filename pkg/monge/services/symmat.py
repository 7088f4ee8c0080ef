"""
Symmetric / SPD matrix algebra.

Every matrix function goes through one symmetric eigendecomposition; at the
dimensions used here (d up to about a thousand) the O(d^3) cost is fine.
"""

import logging
from typing import Union

import numpy as np
from scipy import linalg

from monge.config import Config
from monge.errors import (
    AlphaOutOfRange, DimMismatch, IllConditioned, NonFinite, NonSymmetric, NotPositiveDefinite,
)
from monge.models import SpdMatrix, SymEig

logger = logging.getLogger(__name__)

MatrixLike = Union[SpdMatrix, np.ndarray]


def as_symmetric(M: MatrixLike, tol: float = Config.SYM_EIG_TOL) -> np.ndarray:
    """
    Validate a square symmetric matrix and return its exact symmetrization

    Args:
        M: matrix or SpdMatrix
        tol: elementwise tolerance, relative to 1 + |M_ij|

    Returns:
        np.ndarray: (M + Mᵀ) / 2
    """
    if isinstance(M, SpdMatrix):
        return M.entries
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimMismatch(f'expected a square matrix, got shape {M.shape}')
    if not np.all(np.isfinite(M)):
        raise NonFinite('matrix contains NaN or infinite entries')
    gap = np.abs(M - M.T)
    if np.any(gap > tol * (1.0 + np.abs(M))):
        raise NonSymmetric(f'asymmetry {gap.max():.3e} exceeds tolerance {tol:g}')
    return 0.5 * (M + M.T)


def sym_eig(M: MatrixLike) -> SymEig:
    """
    Eigendecomposition of a symmetric matrix

    Args:
        M: symmetric matrix (within 1e-8)

    Returns:
        SymEig: eigenvalues in descending order and orthonormal eigenvector columns
    """
    if isinstance(M, SpdMatrix):
        return SymEig(M.eigenvalues, M.eigenvectors)
    values, vectors = linalg.eigh(as_symmetric(M))
    return SymEig(values[::-1].copy(), vectors[:, ::-1].copy())


def _clamped_eig(M: MatrixLike) -> SymEig:
    # tiny negative eigenvalues of near-PSD inputs are lifted to the clamp floor
    eig = sym_eig(M)
    values = eig.eigenvalues
    top = max(float(values[0]), 0.0)
    floor = Config.EIG_CLAMP_TOL * top
    if top <= 0.0 or values[-1] < -floor:
        raise NotPositiveDefinite(
            f'eigenvalue {values[-1]:.3e} below clamp tolerance {-floor:.3e}'
        )
    return SymEig(np.maximum(values, floor), eig.eigenvectors)


def _matrix_function(eig: SymEig, fn) -> SpdMatrix:
    return SpdMatrix.from_eig(fn(eig.eigenvalues), eig.eigenvectors)


def _invertible_eig(M: MatrixLike) -> SymEig:
    eig = sym_eig(M)
    values = eig.eigenvalues
    if values[0] <= 0.0 or values[-1] < -Config.EIG_CLAMP_TOL * values[0]:
        raise NotPositiveDefinite(f'eigenvalues span [{values[-1]:.3e}, {values[0]:.3e}]')
    ratio = values[-1] / values[0]
    if ratio < Config.ILL_CONDITIONED_RATIO:
        raise IllConditioned(f'eigenvalue ratio {ratio:.3e} below {Config.ILL_CONDITIONED_RATIO:g}')
    return eig


def spd_sqrt(M: MatrixLike) -> SpdMatrix:
    """Principal square root R with R·R = M"""
    return _matrix_function(_clamped_eig(M), np.sqrt)


def psd_sqrt(M: MatrixLike) -> np.ndarray:
    """Principal square root of a PSD matrix that may be singular; round-off negatives root to zero"""
    eig = sym_eig(M)
    values = eig.eigenvalues
    if values[-1] < -Config.EIG_CLAMP_TOL * max(float(values[0]), 0.0):
        raise NotPositiveDefinite(f'eigenvalue {values[-1]:.3e} is negative')
    roots = np.sqrt(np.clip(values, 0.0, None))
    return (eig.eigenvectors * roots) @ eig.eigenvectors.T


def spd_inv_sqrt(M: MatrixLike) -> SpdMatrix:
    """
    Inverse principal square root R with R·M·R = I

    Raises:
        IllConditioned: if λ_min/λ_max < 1e-14; shrink the input first
    """
    return _matrix_function(_invertible_eig(M), lambda v: 1.0 / np.sqrt(v))


def spd_inv(M: MatrixLike) -> SpdMatrix:
    """Inverse of an SPD matrix through its eigendecomposition"""
    return _matrix_function(_invertible_eig(M), lambda v: 1.0 / v)


def congruence(R: MatrixLike, M: MatrixLike) -> np.ndarray:
    """R·M·R for symmetric R, symmetrized"""
    R = as_symmetric(R)
    product = R @ as_symmetric(M) @ R
    return 0.5 * (product + product.T)


def geometric_mean(B: MatrixLike, C: MatrixLike) -> SpdMatrix:
    """
    Matrix geometric mean B # C = B^{1/2} (B^{-1/2} C B^{-1/2})^{1/2} B^{1/2}

    The result X is the SPD solution of X·B⁻¹·X = C and is symmetric in B, C.
    """
    B = B if isinstance(B, SpdMatrix) else SpdMatrix(as_symmetric(B))
    C = C if isinstance(C, SpdMatrix) else SpdMatrix(as_symmetric(C))
    if B.dim != C.dim:
        raise DimMismatch(f'geometric mean of {B.dim}x{B.dim} and {C.dim}x{C.dim} matrices')
    root = spd_sqrt(B)
    inner = spd_sqrt(congruence(spd_inv_sqrt(B), C))
    return SpdMatrix(congruence(root, inner))


def shrink(S: MatrixLike, alpha: float) -> SpdMatrix:
    """
    Covariance shrinkage toward the identity

    Args:
        S: symmetric PSD matrix
        alpha: shrinkage coefficient in [0, 1]

    Returns:
        SpdMatrix: (1 - alpha)·S + alpha·I
    """
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f'alpha must lie in [0, 1], got {alpha}')
    if alpha == 0.0 and isinstance(S, SpdMatrix):
        return S
    S = as_symmetric(S)
    return SpdMatrix((1.0 - alpha) * S + alpha * np.eye(S.shape[0]))
