"""
Linear Monge mapping: T(x) = m2 + A(x - m1) with
A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2}.
"""

import logging

import numpy as np

from monge.errors import (
    DimMismatch, IllConditioned, NotPositiveDefinite, SingularCovariance, SingularSource,
)
from monge.models import LinearMongeMap, SampleSet, SpdMatrix
from monge.services.moments import condition_number, estimate_moments
from monge.services.symmat import congruence, shrink, spd_inv, spd_inv_sqrt, spd_sqrt

logger = logging.getLogger(__name__)


def _as_spd(S) -> SpdMatrix:
    return S if isinstance(S, SpdMatrix) else SpdMatrix(S)


def fit_exact(m1, S1, m2, S2, alpha: float = 0.0) -> LinearMongeMap:
    """
    Monge map between two laws with known first and second moments

    Args:
        m1, S1: source mean and SPD covariance
        m2, S2: target mean and SPD covariance
        alpha: shrinkage already applied to S1, S2 (recorded only)

    Returns:
        LinearMongeMap: with A·S1·A = S2
    """
    S1, S2 = _as_spd(S1), _as_spd(S2)
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if S1.dim != S2.dim or m1.shape != (S1.dim,) or m2.shape != (S2.dim,):
        raise DimMismatch(
            f'source ({m1.shape}, {S1.dim}) and target ({m2.shape}, {S2.dim}) do not agree'
        )
    root = spd_sqrt(S1)
    inv_root = spd_inv_sqrt(S1)
    middle = spd_sqrt(congruence(root, S2))
    A = SpdMatrix(congruence(inv_root, middle))
    return LinearMongeMap(m1=m1, m2=m2, A=A, alpha=alpha)


def fit_empirical(Xs: SampleSet, Xt: SampleSet, alpha: float = 0.0) -> LinearMongeMap:
    """
    Empirical linear Monge map from source and target samples

    Both empirical covariances are shrunk toward the identity by alpha
    before the closed form is applied.

    Raises:
        SingularSource: alpha = 0 and the source covariance is singular
    """
    if Xs.d != Xt.d:
        raise DimMismatch(f'source dimension {Xs.d} differs from target dimension {Xt.d}')
    if alpha == 0.0 and Xs.n <= Xs.d:
        raise SingularSource(f'{Xs.n} source samples cannot span {Xs.d} dimensions without shrinkage')
    source = estimate_moments(Xs)
    target = estimate_moments(Xt)

    try:
        S1 = shrink(source.cov, alpha)
    except (NotPositiveDefinite, IllConditioned) as exc:
        raise SingularSource(f'source covariance is singular: {exc}') from exc
    try:
        S2 = shrink(target.cov, alpha)
    except NotPositiveDefinite as exc:
        raise SingularCovariance(f'target covariance is singular: {exc}') from exc

    logger.debug('fitting linear map d=%d n1=%d n2=%d alpha=%g κ1=%.3g',
                 Xs.d, Xs.n, Xt.n, alpha, condition_number(S1))
    try:
        return fit_exact(source.mean, S1, target.mean, S2, alpha=alpha)
    except IllConditioned as exc:
        raise SingularSource(f'source covariance is numerically singular: {exc}') from exc


def transform(map: LinearMongeMap, X: SampleSet) -> SampleSet:
    """Apply T row by row"""
    if X.d != map.dim:
        raise DimMismatch(f'samples of dimension {X.d} for a map of dimension {map.dim}')
    return SampleSet(map.apply_rows(X.rows))


def inverse(map: LinearMongeMap) -> LinearMongeMap:
    """T⁻¹(y) = m1 + A⁻¹(y - m2)"""
    return LinearMongeMap(m1=map.m2, m2=map.m1, A=spd_inv(map.A), alpha=map.alpha)


def operator_norm(map: LinearMongeMap) -> float:
    """Spectral norm of A, i.e. λ_max(A)"""
    return map.A.lambda_max
