"""
Empirical moments and spectral diagnostics of covariance matrices.
"""

import numpy as np
from scipy import linalg

from monge.errors import ZeroMatrix
from monge.models import MomentEstimate, SampleSet, SpdMatrix
from monge.services.symmat import as_symmetric


def estimate_moments(X: SampleSet) -> MomentEstimate:
    """
    Two-pass mean and covariance with divisor n

    Args:
        X: sample set, one sample per row

    Returns:
        MomentEstimate: mean, covariance (1/n)·Σ(x - m)(x - m)ᵀ and n
    """
    rows = X.rows
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / X.n
    return MomentEstimate(mean=mean, cov=0.5 * (cov + cov.T), n=X.n)


def effective_rank(S) -> float:
    """r(S) = tr(S) / λ_max(S), a value in [1, d]"""
    S = as_symmetric(S)
    top = float(linalg.eigvalsh(S)[-1])
    if top <= 0.0:
        raise ZeroMatrix('effective rank of a matrix without positive eigenvalue')
    return float(np.trace(S)) / top


def condition_number(S: SpdMatrix) -> float:
    """κ(S) = λ_max / λ_min"""
    if not isinstance(S, SpdMatrix):
        S = SpdMatrix(S)
    return S.lambda_max / S.lambda_min
