"""
Mapping quality and distributional distances.
"""

import logging
import math

import numpy as np
from scipy import linalg

from monge.config import Config
from monge.errors import DimMismatch, MongeError, UnknownLoss
from monge.models import BoundAudit, DivergenceEstimate, LabeledDataset, LinearMongeMap, SampleSet
from monge.services.mapping import inverse, operator_norm
from monge.services.moments import effective_rank
from monge.services.symmat import as_symmetric, psd_sqrt

logger = logging.getLogger(__name__)

# Lipschitz constants of the supported surrogate losses w.r.t. the score
LOSS_LIPSCHITZ = {
    'hinge': 1.0,
    'absolute': 1.0,
}


def mapping_divergence(T, Tprime, X: SampleSet, chunk_size: int = Config.DIVERGENCE_CHUNK) -> DivergenceEstimate:
    """
    Monte-Carlo estimate of d(T, T') = E_{x~μ1} ‖T(x) - T'(x)‖

    Args:
        T, Tprime: maps exposing `dim` and `apply_rows` (linear or spectral)
        X: evaluation samples drawn from the source law
        chunk_size: rows mapped at once

    Returns:
        DivergenceEstimate: sample mean, sample count and standard error
    """
    if not (T.dim == Tprime.dim == X.d):
        raise DimMismatch(f'maps of dimension {T.dim}/{Tprime.dim} on samples of dimension {X.d}')
    gaps = np.empty(X.n)
    for start in range(0, X.n, chunk_size):
        block = X.rows[start:start + chunk_size]
        gaps[start:start + chunk_size] = np.linalg.norm(T.apply_rows(block) - Tprime.apply_rows(block), axis=1)
    value = float(gaps.mean())
    stderr = float(gaps.std(ddof=1) / math.sqrt(X.n)) if X.n > 1 else 0.0
    return DivergenceEstimate(value=value, n_eval=X.n, stderr=stderr)


def bures_wasserstein_sq(m1, S1, m2, S2) -> float:
    """
    Squared Bures-Wasserstein (Fréchet) distance between two moment pairs

    ‖m1 - m2‖² + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})
    """
    S1, S2 = as_symmetric(S1), as_symmetric(S2)
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if S1.shape != S2.shape or m1.shape != m2.shape or m1.shape != (S1.shape[0],):
        raise DimMismatch(f'moments of shapes {m1.shape}/{S1.shape} and {m2.shape}/{S2.shape}')

    # tr((S1^½ S2 S1^½)^½) is the nuclear norm of S2^½ S1^½; singular values avoid squaring
    fidelity = float(np.sum(linalg.svdvals(psd_sqrt(S2) @ psd_sqrt(S1))))

    mean_term = float(np.sum((m1 - m2) ** 2))
    trace_term = float(np.trace(S1) + np.trace(S2)) - 2.0 * fidelity
    value = mean_term + trace_term
    if value < 0.0:
        floor = Config.BURES_CLAMP_TOL * max(1.0, float(np.trace(S1) + np.trace(S2)))
        if value < -floor:
            raise MongeError(f'negative squared distance {value:.3e}; inputs are not PSD')
        value = 0.0
    return value


def concentration_rate(S1, S2, n1: int, n2: int, t: float = 1.0) -> float:
    """
    Shape of the high-probability bound on d(T, T̂), without its constant

    max(√(r(S1)/n1), √(r(S2)/n2), √(t/min(n1,n2)), t/min(n1,n2)) · √r(S1)
    """
    r1, r2 = effective_rank(S1), effective_rank(S2)
    n_min = min(n1, n2)
    rate = max(math.sqrt(r1 / n1), math.sqrt(r2 / n2), math.sqrt(t / n_min), t / n_min)
    return rate * math.sqrt(r1)


def _scorer_parts(f):
    if hasattr(f, 'w') and hasattr(f, 'b'):
        return np.asarray(f.w, dtype=np.float64), float(f.b)
    w, b = f
    return np.asarray(w, dtype=np.float64), float(b)


def surrogate_loss(loss: str, y: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Per-sample loss with labels {0, 1} read as {-1, +1}"""
    signed = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    if loss == 'hinge':
        return np.maximum(0.0, 1.0 - signed * scores)
    if loss == 'absolute':
        return np.abs(signed - scores)
    raise UnknownLoss(f'unknown loss {loss!r}; expected one of {sorted(LOSS_LIPSCHITZ)}')


def da_bound_audit(f, loss: str, map_true: LinearMongeMap, map_hat: LinearMongeMap,
                   source: LabeledDataset) -> BoundAudit:
    """
    Evaluate both sides of the risk bound for f∘T̂⁻¹ on one labeled source set

    Target samples are the source samples pushed through the true map, so the
    target risk of f∘T̂⁻¹ is measured on {(T(x_i), y_i)}.

    Args:
        f: linear scorer, either (w, b) or any object with `w` and `b`
        loss: 'hinge' or 'absolute'
        map_true: true Monge map T
        map_hat: estimated map T̂
        source: labeled source samples

    Returns:
        BoundAudit: lhs, rhs = R̂_s(f) + ‖w‖·M_L·‖Â⁻¹‖·d̂(T, T̂), and the
        transport form R̂_s(f) + ‖w‖·M_L·mean‖T̂⁻¹(T(x)) - x‖
    """
    if loss not in LOSS_LIPSCHITZ:
        raise UnknownLoss(f'unknown loss {loss!r}; expected one of {sorted(LOSS_LIPSCHITZ)}')
    w, b = _scorer_parts(f)
    if not (w.shape[0] == map_true.dim == map_hat.dim == source.X.d):
        raise DimMismatch('scorer, maps and samples must share one dimension')
    X = source.X.rows
    lipschitz_f = float(np.linalg.norm(w))
    lipschitz_loss = LOSS_LIPSCHITZ[loss]

    hat_inverse = inverse(map_hat)
    pulled_back = hat_inverse.apply_rows(map_true.apply_rows(X))
    target_losses = surrogate_loss(loss, source.y, pulled_back @ w + b)
    source_risk = float(np.mean(surrogate_loss(loss, source.y, X @ w + b)))

    divergence = mapping_divergence(map_true, map_hat, source.X)
    rhs = source_risk + lipschitz_f * lipschitz_loss * operator_norm(hat_inverse) * divergence.value
    transport_gap = float(np.mean(np.linalg.norm(pulled_back - X, axis=1)))
    transport_rhs = source_risk + lipschitz_f * lipschitz_loss * transport_gap

    lhs = float(np.mean(target_losses))
    lhs_stderr = float(target_losses.std(ddof=1) / math.sqrt(source.n)) if source.n > 1 else 0.0
    logger.debug('bound audit lhs=%.4g rhs=%.4g transport_rhs=%.4g', lhs, rhs, transport_rhs)
    return BoundAudit(lhs=lhs, rhs=rhs, source_risk=source_risk, transport_rhs=transport_rhs,
                      divergence=divergence, lhs_stderr=lhs_stderr)
