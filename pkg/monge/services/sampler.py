"""
Seeded generators for every simulation input.

All randomness flows through numpy Generators backed by PCG64. Independent
substreams are keyed by (seed, *keys) through SeedSequence, so trials can run
in any order or in parallel and still draw identical numbers.
"""

import math
import zlib

import numpy as np
from scipy import fft

from monge.config import Config
from monge.errors import ShapeMismatch
from monge.models import DaProblem, LabeledDataset, SampleSet, SpdMatrix
from monge.services.symmat import spd_sqrt

Rng = np.random.Generator


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode('utf-8'))
    return int(part)


def make_rng(seed: int, *stream) -> Rng:
    """
    PCG64 generator for the substream identified by (seed, *stream)

    Args:
        seed: unsigned 64-bit run seed
        stream: substream keys (ints or strings, e.g. experiment id, d, trial)
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key(part) for part in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def gaussian(rng: Rng, m, S, n: int) -> SampleSet:
    """n rows of m + S^{1/2}·z with z standard normal"""
    m = np.asarray(m, dtype=np.float64)
    root = spd_sqrt(S).entries
    if root.shape[0] != m.shape[0]:
        raise ShapeMismatch(f'mean of size {m.shape[0]} with a {root.shape[0]}x{root.shape[0]} covariance')
    z = rng.standard_normal((n, m.shape[0]))
    return SampleSet(m + z @ root)


def wishart_identity(rng: Rng, d: int) -> SpdMatrix:
    """
    Draw from W_d(I, d) as G·Gᵀ with G a d×d standard normal matrix

    Near-singular draws (λ_min <= 1e-12·λ_max) are rejected and redrawn.
    """
    while True:
        G = rng.standard_normal((d, d))
        W = G @ G.T
        values = np.linalg.eigvalsh(W)
        if values[-1] > 0.0 and values[0] > Config.WISHART_REDRAW_RATIO * values[-1]:
            return SpdMatrix(0.5 * (W + W.T))


def make_gaussian_pair(rng: Rng, d: int):
    """
    Random Gaussian transport problem: m_j ~ N(0, 10·I), Σ_j ~ W_d(I, d)

    Returns:
        tuple: (m1, S1, m2, S2)
    """
    scale = math.sqrt(Config.MEAN_VARIANCE)
    m1 = rng.normal(0.0, scale, d)
    m2 = rng.normal(0.0, scale, d)
    S1 = wishart_identity(rng, d)
    S2 = wishart_identity(rng, d)
    return m1, S1, m2, S2


def da_shift(d: int) -> np.ndarray:
    """Sensor drift c: first ⌈d/2⌉ coordinates at 10, the rest at 0"""
    c = np.zeros(d)
    c[:math.ceil(d / 2)] = Config.DA_SHIFT
    return c


def draw_da_source(rng: Rng, sigma0: SpdMatrix, n: int) -> LabeledDataset:
    """Equal-prior mixture: label 0 ~ N(0, Σ0), label 1 ~ N(1, Σ0)"""
    y = rng.integers(0, 2, size=n)
    noise = rng.standard_normal((n, sigma0.dim)) @ spd_sqrt(sigma0).entries
    return LabeledDataset(SampleSet(noise + y[:, None].astype(np.float64)), y)


def draw_da_target(rng: Rng, problem: DaProblem, n: int) -> LabeledDataset:
    """Fresh labeled target samples B·x + c"""
    source = draw_da_source(rng, problem.sigma0, n)
    return LabeledDataset(SampleSet(source.X.rows @ problem.B.entries + problem.c), source.y)


def make_da_problem(rng: Rng, d: int, n_labeled: int, n_unsup: int) -> DaProblem:
    """
    Two-class domain adaptation problem with an affine sensor shift

    Σ0 and B are drawn once from W_d(I, d). The labeled source set, the
    unlabeled source set and the unlabeled target set are independent.
    """
    sigma0 = wishart_identity(rng, d)
    B = wishart_identity(rng, d)
    c = da_shift(d)
    source = draw_da_source(rng, sigma0, n_labeled)
    source_unlab = draw_da_source(rng, sigma0, n_unsup).X
    target_unlab = draw_da_source(rng, sigma0, n_unsup).X.rows @ B.entries + c
    return DaProblem(
        source=source,
        source_unlab=source_unlab,
        target_unlab=SampleSet(target_unlab),
        B=B,
        c=c,
        sigma0=sigma0,
    )


def motion_blur_kernel(length_px: int = Config.BLUR_LENGTH, angle_deg: float = Config.BLUR_ANGLE) -> np.ndarray:
    """
    Normalized line-segment point spread function

    `length_px` points spaced one pixel apart along a segment centred at the
    origin are snapped to the nearest pixel on the smallest odd square canvas.
    Every pixel hit gets the same weight and a pixel hit twice still counts
    once, so the default 5 px segment at 45° covers only 3 diagonal pixels.
    """
    if length_px < 1:
        raise ShapeMismatch(f'blur length must be >= 1, got {length_px}')
    theta = math.radians(angle_deg)
    t = np.arange(length_px) - (length_px - 1) / 2.0
    cols = np.floor(t * math.cos(theta) + 0.5).astype(int)
    rows = np.floor(-t * math.sin(theta) + 0.5).astype(int)
    half = int(max(np.abs(cols).max(), np.abs(rows).max()))
    kernel = np.zeros((2 * half + 1, 2 * half + 1))
    kernel[rows + half, cols + half] = 1.0
    return kernel / kernel.sum()


def embed_kernel(kernel: np.ndarray, shape: tuple) -> np.ndarray:
    """Place a centred odd-sized kernel on a circular grid, centre at index (0, 0)"""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] > shape[0] or kernel.shape[1] > shape[1]:
        raise ShapeMismatch(f'kernel {kernel.shape} does not fit images of shape {shape}')
    canvas = np.zeros(shape)
    canvas[:kernel.shape[0], :kernel.shape[1]] = kernel
    return np.roll(canvas, (-(kernel.shape[0] // 2), -(kernel.shape[1] // 2)), axis=(0, 1))


def kernel_response(kernel: np.ndarray, shape: tuple) -> np.ndarray:
    """Complex transfer function of circular convolution with the kernel"""
    return fft.fft2(embed_kernel(kernel, shape))


def blur_stack(X: np.ndarray, kernel: np.ndarray, workers: int = 1) -> np.ndarray:
    """Circular 2D convolution of every image of the stack with the kernel"""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ShapeMismatch(f'expected an image stack (n, h, w), got {X.shape}')
    response = kernel_response(kernel, X.shape[1:])
    spectra = fft.fft2(X, axes=(1, 2), workers=workers)
    return fft.ifft2(spectra * response, axes=(1, 2), workers=workers).real


def radial_spectrum(shape: tuple, cutoff: float = Config.IMAGE_SPECTRUM_CUTOFF) -> np.ndarray:
    """Smooth low-pass power spectrum 1 / (1 + (|k| / cutoff)²)² on a DFT grid"""
    grids = np.meshgrid(*[np.fft.fftfreq(size) * size for size in shape], indexing='ij')
    radius_sq = sum(g ** 2 for g in grids)
    return 1.0 / (1.0 + radius_sq / cutoff ** 2) ** 2


def stationary_image_stack(rng: Rng, shape: tuple, spectrum: np.ndarray, n: int,
                           workers: int = 1) -> np.ndarray:
    """
    n real stationary fields with circulant covariance F·diag(spectrum)·F*

    Each sample is IDFT(√spectrum ⊙ DFT(white noise)); the spectrum must be
    symmetric under k -> -k for the fields to be real.
    """
    shape = tuple(shape)
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.shape != shape:
        raise ShapeMismatch(f'spectrum {spectrum.shape} for samples of shape {shape}')
    axes = tuple(range(1, len(shape) + 1))
    white = rng.standard_normal((n,) + shape)
    colored = fft.ifftn(np.sqrt(spectrum) * fft.fftn(white, axes=axes, workers=workers),
                        axes=axes, workers=workers)
    return colored.real
