"""
Two-class Linear Discriminant Analysis.
"""

import logging
import math

import numpy as np
from scipy import linalg, special

from monge.config import Config
from monge.errors import DimMismatch, IllConditioned, MissingClass, NotPositiveDefinite, SingularPooled
from monge.models import LabeledDataset, LdaModel, SampleSet, SpdMatrix
from monge.services.moments import estimate_moments
from monge.services.symmat import shrink

logger = logging.getLogger(__name__)


def lda_fit(D: LabeledDataset, shrink_alpha: float = 0.0) -> LdaModel:
    """
    Fit a shared-covariance Gaussian discriminant

    Args:
        D: labeled samples, labels in {0, 1}
        shrink_alpha: shrinkage of the pooled covariance toward I

    Returns:
        LdaModel: w = Σ⁻¹(μ1 - μ0), b = -w·(μ0 + μ1)/2 + log(p1/p0)
    """
    counts = np.bincount(D.y, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise MissingClass(f'both classes are required, got counts {counts.tolist()}')
    p0, p1 = counts / D.n
    class0 = estimate_moments(SampleSet(D.X.rows[D.y == 0]))
    class1 = estimate_moments(SampleSet(D.X.rows[D.y == 1]))
    pooled = p0 * class0.cov + p1 * class1.cov
    try:
        pooled = shrink(pooled, shrink_alpha)
    except NotPositiveDefinite as exc:
        raise SingularPooled(f'pooled covariance is singular: {exc}') from exc
    if pooled.lambda_min < Config.ILL_CONDITIONED_RATIO * pooled.lambda_max:
        raise SingularPooled(f'pooled covariance is numerically singular (κ={pooled.lambda_max / pooled.lambda_min:.3e})')

    w = linalg.solve(pooled.entries, class1.mean - class0.mean, assume_a='pos')
    b = -float(w @ (class0.mean + class1.mean)) / 2.0 + math.log(p1 / p0)
    logger.debug('lda fit n=%d priors=(%.3f, %.3f) |w|=%.4g', D.n, p0, p1, np.linalg.norm(w))
    return LdaModel(mean0=class0.mean, mean1=class1.mean, w=w, b=b,
                    pooled_cov=pooled, priors=(float(p0), float(p1)))


def predict(model: LdaModel, X: SampleSet) -> np.ndarray:
    """Labels 1 where w·x + b >= 0, else 0"""
    if X.d != model.dim:
        raise DimMismatch(f'samples of dimension {X.d} for a {model.dim}-d classifier')
    return (model.decision_function(X.rows) >= 0.0).astype(np.int64)


def error_rate(pred, truth) -> float:
    """Fraction of mismatched labels"""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DimMismatch(f'{pred.shape[0]} predictions for {truth.shape[0]} labels')
    if pred.size == 0:
        return 0.0
    return float(np.mean(pred != truth))


def bayes_error_two_gaussians(Sigma0: SpdMatrix, delta) -> float:
    """
    Bayes error Φ(-Δ/2) for equal-prior classes N(μ, Σ0), N(μ + delta, Σ0)

    Δ is the Mahalanobis length √(deltaᵀ Σ0⁻¹ delta).
    """
    if not isinstance(Sigma0, SpdMatrix):
        Sigma0 = SpdMatrix(Sigma0)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (Sigma0.dim,):
        raise DimMismatch(f'delta of shape {delta.shape} for a {Sigma0.dim}-d covariance')
    try:
        whitened = linalg.solve(Sigma0.entries, delta, assume_a='pos')
    except linalg.LinAlgError as exc:
        raise IllConditioned(str(exc)) from exc
    mahalanobis = math.sqrt(max(float(delta @ whitened), 0.0))
    return float(special.ndtr(-mahalanobis / 2.0))
