"""
Convolutional Monge mapping for stationary signals and images.

Stationary covariances are modelled as circulant (doubly circulant in 2D):
Σ = F·diag(D)·F* with the unitary DFT F, so the Monge operator is the
circular convolution with frequency response √(D2/D1). Forward transforms are
unnormalized; the periodogram carries the 1/(n·d) factor so D matches the
circulant eigenvalues.
"""

import logging

import numpy as np
from scipy import fft

from monge.config import Config
from monge.errors import AlphaOutOfRange, ImaginaryResidue, ShapeMismatch, ZeroSourceSpectrum
from monge.models import SpectralMongeMap

logger = logging.getLogger(__name__)


def _axes(ndim: int, sample_ndim: int) -> tuple:
    return tuple(range(ndim - sample_ndim, ndim))


def mirror(spectrum: np.ndarray) -> np.ndarray:
    """spectrum[-k], the frequency reversal along every axis"""
    flipped = np.flip(spectrum)
    return np.roll(flipped, 1, axis=tuple(range(spectrum.ndim)))


def estimate_power_spectrum(X: np.ndarray, mean: np.ndarray, workers: int = 1) -> np.ndarray:
    """
    Averaged periodogram of a stack of signals or images

    Args:
        X: stack of shape (n, *shape)
        mean: array of shape `shape` subtracted from every sample
        workers: FFT worker threads

    Returns:
        np.ndarray: D̂[k] = (1/(n·d)) Σ_i |DFT(x_i - mean)[k]|², real and nonnegative
    """
    X = np.asarray(X, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    if X.ndim != mean.ndim + 1 or X.shape[1:] != mean.shape or X.shape[0] < 1:
        raise ShapeMismatch(f'stack {X.shape} does not match mean {mean.shape}')
    axes = _axes(X.ndim, mean.ndim)
    spectra = fft.fftn(X - mean, axes=axes, workers=workers)
    power = np.sum(spectra.real ** 2 + spectra.imag ** 2, axis=0) / (X.shape[0] * mean.size)
    # real samples have |X[k]| = |X[-k]|; enforce it exactly
    return 0.5 * (power + mirror(power))


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f'alpha must lie in [0, 1], got {alpha}')


def conv_from_spectra(d1, d2, mean1, mean2, alpha: float = 0.0) -> SpectralMongeMap:
    """
    Spectral Monge map between two stationary laws with known spectra

    Spectra are shrunk as (1 - alpha)·D + alpha, the circulant form of
    covariance shrinkage, then response = √D̃2 / √D̃1.
    """
    _check_alpha(alpha)
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape != d2.shape:
        raise ShapeMismatch(f'source spectrum {d1.shape} and target spectrum {d2.shape}')
    d1 = (1.0 - alpha) * d1 + alpha
    d2 = (1.0 - alpha) * d2 + alpha
    scale = max(float(np.max(np.abs(d1))), float(np.max(np.abs(d2))), np.finfo(float).tiny)
    if np.any(d1 <= np.finfo(float).eps * scale):
        raise ZeroSourceSpectrum(
            f'source spectrum vanishes at {int(np.sum(d1 <= np.finfo(float).eps * scale))} frequencies'
        )
    response = np.sqrt(np.maximum(d2, 0.0)) / np.sqrt(d1)
    return SpectralMongeMap(response=response, mean1=mean1, mean2=mean2, alpha=alpha)


def fit_conv(Xs: np.ndarray, Xt: np.ndarray, alpha: float = 0.0, workers: int = 1) -> SpectralMongeMap:
    """
    Convolutional Monge map from two stacks of signals or images

    Args:
        Xs: source stack (n1, *shape)
        Xt: target stack (n2, *shape)
        alpha: spectral shrinkage in [0, 1]

    Raises:
        ZeroSourceSpectrum: alpha = 0 and the source spectrum has a zero
    """
    _check_alpha(alpha)
    Xs = np.asarray(Xs, dtype=np.float64)
    Xt = np.asarray(Xt, dtype=np.float64)
    if Xs.shape[1:] != Xt.shape[1:] or Xs.ndim not in (2, 3):
        raise ShapeMismatch(f'source stack {Xs.shape} and target stack {Xt.shape}')
    mean1 = Xs.mean(axis=0)
    mean2 = Xt.mean(axis=0)
    d1 = estimate_power_spectrum(Xs, mean1, workers=workers)
    d2 = estimate_power_spectrum(Xt, mean2, workers=workers)
    logger.debug('fitting conv map shape=%s n1=%d n2=%d alpha=%g',
                 Xs.shape[1:], Xs.shape[0], Xt.shape[0], alpha)
    return conv_from_spectra(d1, d2, mean1, mean2, alpha=alpha)


def apply_conv(map: SpectralMongeMap, x: np.ndarray, workers: int = 1) -> np.ndarray:
    """
    T(x) = mean2 + IDFT(response ⊙ DFT(x - mean1))

    Args:
        map: spectral map
        x: one sample of shape map.shape or a stack (n, *map.shape)

    Raises:
        ImaginaryResidue: the inverse transform is not real to 1e-8·‖x‖
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-len(map.shape):] != map.shape or x.ndim not in (len(map.shape), len(map.shape) + 1):
        raise ShapeMismatch(f'input {x.shape} for a map on {map.shape}')
    axes = _axes(x.ndim, len(map.shape))
    centered = x - map.mean1
    filtered = fft.ifftn(map.response * fft.fftn(centered, axes=axes, workers=workers),
                         axes=axes, workers=workers)
    residue = float(np.max(np.abs(filtered.imag), initial=0.0))
    scale = max(float(np.linalg.norm(x)), float(np.linalg.norm(centered)))
    if residue > Config.SPECTRAL_RESIDUE_TOL * scale:
        raise ImaginaryResidue(f'imaginary residue {residue:.3e} for input norm {scale:.3e}')
    return map.mean2 + filtered.real


def inverse_conv(map: SpectralMongeMap) -> SpectralMongeMap:
    """T⁻¹(y) = mean1 + IDFT(DFT(y - mean2) / response)"""
    if np.any(map.response <= 0.0):
        raise ZeroSourceSpectrum('a map with a zero response is not invertible')
    return SpectralMongeMap(response=1.0 / map.response, mean1=map.mean2, mean2=map.mean1,
                            alpha=map.alpha)


def spatial_filter(map: SpectralMongeMap) -> np.ndarray:
    """Impulse response of the map, zero lag shifted to the array centre"""
    kernel = fft.ifftn(map.response).real
    return fft.fftshift(kernel)
