from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg

from monge.config import Config
from monge.errors import (
    DimMismatch, ImaginaryResidue, InvalidConfig, MissingClass, NonFinite, NonSymmetric,
    NotPositiveDefinite, ShapeMismatch,
)


def _frozen_array(values, ndim: Optional[int] = None) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    if ndim is not None and array.ndim != ndim:
        raise DimMismatch(f'expected a {ndim}-d array, got shape {array.shape}')
    if not np.all(np.isfinite(array)):
        raise NonFinite('array contains NaN or infinite entries')
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """Symmetric positive-definite matrix, validated at construction.

    The eigendecomposition computed for validation is kept (descending
    order) so matrix functions do not decompose twice.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise DimMismatch(f'SPD matrix must be square, got shape {entries.shape}')
        if not np.all(np.isfinite(entries)):
            raise NonFinite('SPD matrix contains NaN or infinite entries')
        gap = np.abs(entries - entries.T)
        if np.any(gap > Config.SYMMETRY_TOL * (1.0 + np.abs(entries))):
            raise NonSymmetric(f'asymmetry {gap.max():.3e} exceeds tolerance')
        entries = 0.5 * (entries + entries.T)
        values, vectors = linalg.eigh(entries)
        if values[0] <= 0.0:
            raise NotPositiveDefinite(f'smallest eigenvalue {values[0]:.3e} is not positive')
        self._store(entries, values[::-1], vectors[:, ::-1])

    def _store(self, entries, values, vectors):
        for array in (entries, values, vectors):
            array.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, '_eigenvalues', values)
        object.__setattr__(self, '_eigenvectors', vectors)

    @classmethod
    def from_eig(cls, values: np.ndarray, vectors: np.ndarray) -> 'SpdMatrix':
        """Build V·diag(values)·Vᵀ from a known decomposition with values > 0"""
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0 or values.min() <= 0.0:
            raise NotPositiveDefinite('eigenvalues must be positive')
        order = np.argsort(values)[::-1]
        values = np.array(values[order])
        vectors = np.array(vectors[:, order], dtype=np.float64)
        entries = (vectors * values) @ vectors.T
        entries = 0.5 * (entries + entries.T)
        instance = object.__new__(cls)
        instance._store(entries, values, vectors)
        return instance

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order"""
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigenvectors

    @property
    def lambda_max(self) -> float:
        return float(self._eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self._eigenvalues[-1])

    def __repr__(self):
        return f'<SpdMatrix dim={self.dim} λ=[{self.lambda_min:.3g}, {self.lambda_max:.3g}]>'


@dataclass(frozen=True, eq=False)
class SymEig:
    """Eigendecomposition of a symmetric matrix (descending eigenvalues)"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n samples of dimension d, one sample per row"""

    rows: np.ndarray

    def __post_init__(self):
        rows = _frozen_array(self.rows, ndim=2)
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DimMismatch(f'sample set needs n >= 1 and d >= 1, got shape {rows.shape}')
        object.__setattr__(self, 'rows', rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def head(self, n: int) -> 'SampleSet':
        """First n samples"""
        return SampleSet(self.rows[:n])

    def __repr__(self):
        return f'<SampleSet n={self.n} d={self.d}>'


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Empirical mean and covariance (divisor n)"""

    mean: np.ndarray
    cov: np.ndarray
    n: int


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Samples with binary labels in {0, 1}"""

    X: SampleSet
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.int64, copy=True).ravel()
        if y.shape[0] != self.X.n:
            raise DimMismatch(f'{y.shape[0]} labels for {self.X.n} samples')
        if np.any((y != 0) & (y != 1)):
            raise MissingClass('labels must be 0 or 1')
        y.setflags(write=False)
        object.__setattr__(self, 'y', y)

    @property
    def n(self) -> int:
        return self.X.n

    def head(self, n: int) -> 'LabeledDataset':
        return LabeledDataset(self.X.head(n), self.y[:n])


@dataclass(frozen=True, eq=False)
class LinearMongeMap:
    """Affine map T(x) = m2 + A(x - m1) with A symmetric positive definite"""

    m1: np.ndarray
    m2: np.ndarray
    A: SpdMatrix
    alpha: float = 0.0

    def __post_init__(self):
        m1 = _frozen_array(self.m1, ndim=1)
        m2 = _frozen_array(self.m2, ndim=1)
        if not (m1.shape[0] == m2.shape[0] == self.A.dim):
            raise DimMismatch(
                f'means of size {m1.shape[0]} and {m2.shape[0]} for a {self.A.dim}x{self.A.dim} map'
            )
        object.__setattr__(self, 'm1', m1)
        object.__setattr__(self, 'm2', m2)
        object.__setattr__(self, 'alpha', float(self.alpha))

    @property
    def dim(self) -> int:
        return self.A.dim

    def apply_rows(self, rows: np.ndarray) -> np.ndarray:
        """Map each row; A is symmetric so right-multiplication suffices"""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimMismatch(f'rows of shape {rows.shape} for a map of dimension {self.dim}')
        return (rows - self.m1) @ self.A.entries + self.m2

    def __repr__(self):
        return f'<LinearMongeMap dim={self.dim} alpha={self.alpha:g}>'


@dataclass(frozen=True, eq=False)
class SpectralMongeMap:
    """Circular convolution map T(x) = mean2 + F·diag(response)·F*·(x - mean1)"""

    response: np.ndarray
    mean1: np.ndarray
    mean2: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        response = _frozen_array(self.response)
        mean1 = _frozen_array(self.mean1)
        mean2 = _frozen_array(self.mean2)
        if response.ndim not in (1, 2):
            raise ShapeMismatch(f'spectral maps act on 1D signals or 2D images, got {response.shape}')
        if mean1.shape != response.shape or mean2.shape != response.shape:
            raise ShapeMismatch(
                f'means {mean1.shape}/{mean2.shape} do not match response {response.shape}'
            )
        if np.any(response < 0.0):
            raise NotPositiveDefinite('frequency response must be nonnegative')
        # a real filter needs response[k] == response[-k]
        residue = np.abs(np.fft.ifftn(response).imag).max()
        if residue > 1e-9 * max(1.0, float(response.max())):
            raise ImaginaryResidue(f'response induces a complex filter (residue {residue:.3e})')
        object.__setattr__(self, 'response', response)
        object.__setattr__(self, 'mean1', mean1)
        object.__setattr__(self, 'mean2', mean2)
        object.__setattr__(self, 'alpha', float(self.alpha))

    @property
    def shape(self) -> tuple:
        return self.response.shape

    @property
    def dim(self) -> int:
        return int(self.response.size)

    def apply_rows(self, rows: np.ndarray) -> np.ndarray:
        """Map flattened signals/images, one per row"""
        from monge.services.convmap import apply_conv

        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise ShapeMismatch(f'rows of shape {rows.shape} for a map on {self.shape}')
        stack = rows.reshape((rows.shape[0],) + self.shape)
        return apply_conv(self, stack).reshape(rows.shape[0], self.dim)

    def __repr__(self):
        return f'<SpectralMongeMap shape={self.shape} alpha={self.alpha:g}>'


@dataclass(frozen=True, eq=False)
class DivergenceEstimate:
    """Monte-Carlo estimate of E‖T(x) - T'(x)‖"""

    value: float
    n_eval: int
    stderr: float


class BoundAudit(NamedTuple):
    """Both sides of the domain-adaptation risk bound on one sample"""

    lhs: float
    rhs: float
    source_risk: float
    transport_rhs: float
    divergence: DivergenceEstimate
    lhs_stderr: float


@dataclass(frozen=True, eq=False)
class LdaModel:
    """Two-class linear discriminant: predict 1 iff w·x + b >= 0"""

    mean0: np.ndarray
    mean1: np.ndarray
    w: np.ndarray
    b: float
    pooled_cov: SpdMatrix
    priors: tuple

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def decision_function(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimMismatch(f'rows of shape {rows.shape} for a {self.dim}-d classifier')
        return rows @ self.w + self.b


@dataclass(frozen=True, eq=False)
class DaProblem:
    """Two-class source law N(0,Σ0)/N(1,Σ0) and its affine image x -> Bx + c"""

    source: LabeledDataset
    source_unlab: SampleSet
    target_unlab: SampleSet
    B: SpdMatrix
    c: np.ndarray
    sigma0: SpdMatrix

    @property
    def dim(self) -> int:
        return self.B.dim

    @property
    def truth(self) -> LinearMongeMap:
        """The affine shift as a Monge map centred on the mixture mean"""
        mixture_mean = np.full(self.dim, 0.5)
        return LinearMongeMap(
            m1=mixture_mean,
            m2=self.B.entries @ mixture_mean + self.c,
            A=self.B,
        )


@dataclass(frozen=True, eq=False)
class ImageStack:
    """n grayscale images with pixels in [0, 1]"""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = _frozen_array(self.pixels, ndim=3)
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise NonFinite('pixels must lie in [0, 1]')
        object.__setattr__(self, 'pixels', pixels)

    @property
    def n(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    def as_samples(self) -> SampleSet:
        return SampleSet(self.pixels.reshape(self.n, -1))

    def __repr__(self):
        return f'<ImageStack n={self.n} {self.height}x{self.width}>'


def _as_int(name: str, value) -> int:
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f'{name} must be an integer, got {value!r}') from exc


def _as_int_tuple(name: str, value) -> tuple:
    if isinstance(value, str):
        value = [part for part in value.split(',') if part.strip()]
    return tuple(_as_int(name, v) for v in value)


def _strictly_increasing(grid) -> bool:
    return all(a < b for a, b in zip(grid, grid[1:]))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one Monte-Carlo experiment run"""

    seed: int = 0
    dims: tuple = Config.DIMS  # comma-separated strings are accepted
    n_grid: tuple = Config.N_GRID
    n_l_grid: tuple = Config.N_L_GRID
    trials: int = Config.TRIALS
    n_eval: int = Config.N_EVAL
    alpha: Optional[float] = None
    output: Optional[Path] = None
    threads: int = 1
    oracle_map: bool = False
    blur_length: int = Config.BLUR_LENGTH
    blur_angle: float = Config.BLUR_ANGLE
    image_shape: tuple = Config.IMAGE_SHAPE

    def __post_init__(self):
        for name in ('dims', 'n_grid', 'n_l_grid', 'image_shape'):
            object.__setattr__(self, name, _as_int_tuple(name, getattr(self, name)))
        for name in ('seed', 'trials', 'n_eval', 'threads', 'blur_length'):
            object.__setattr__(self, name, _as_int(name, getattr(self, name)))
        for name in ('dims', 'n_grid', 'n_l_grid'):
            grid = getattr(self, name)
            if not grid:
                raise InvalidConfig(f'{name} must not be empty')
            if min(grid) < 1:
                raise InvalidConfig(f'{name} entries must be >= 1, got {grid}')
            if not _strictly_increasing(grid):
                raise InvalidConfig(f'{name} must be strictly increasing, got {grid}')
        for name in ('trials', 'n_eval', 'threads', 'blur_length'):
            if getattr(self, name) < 1:
                raise InvalidConfig(f'{name} must be >= 1, got {getattr(self, name)}')
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig(f'alpha must lie in [0, 1], got {self.alpha}')

    @classmethod
    def from_config(cls, config_class=Config, **overrides) -> 'ExperimentConfig':
        """Defaults taken from a Config class, overridden by keyword"""
        values = dict(
            seed=config_class.SEED,
            dims=config_class.DIMS,
            n_grid=config_class.N_GRID,
            n_l_grid=config_class.N_L_GRID,
            trials=config_class.TRIALS,
            n_eval=config_class.N_EVAL,
            threads=config_class.THREADS,
            blur_length=config_class.BLUR_LENGTH,
            blur_angle=config_class.BLUR_ANGLE,
            image_shape=config_class.IMAGE_SHAPE,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def alpha_or(self, default: float) -> float:
        return default if self.alpha is None else self.alpha


@dataclass(frozen=True)
class ResultRow:
    """One CSV line: experiment,d,n,n_l,trial,metric,value"""

    experiment: str
    d: int
    n: Optional[int]
    n_l: Optional[int]
    trial: Optional[int]
    metric: str
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise NonFinite(f'{self.metric} is not finite for {self.experiment} d={self.d} n={self.n}')
        object.__setattr__(self, 'value', float(self.value))

    def sort_key(self) -> tuple:
        def key(v):
            return -1 if v is None else v
        return (self.experiment, self.d, key(self.n), key(self.n_l), key(self.trial), self.metric)
