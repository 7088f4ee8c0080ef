"""
Dataset ingestion, result emission and map persistence.

File kinds handled here:
    IDX images (magic 0x00000803) and labels (0x00000801), optionally gzipped
    headerless sample CSV (one sample per row, '.' decimals)
    result CSV with header experiment,d,n,n_l,trial,metric,value
    map artifacts tagged LMM1 (linear) or SMM1 (spectral)
    SVG line plots, CSV grids and PGM (P2) images for filters
"""

import csv
import gzip
import io
import logging
import math
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from jinja2 import Environment, PackageLoader, select_autoescape

from monge.errors import (
    BadMagic, DataFormatError, DimMismatch, IoError, InvalidSeries, MapFormatError, NonPositiveOnLogAxis,
    TruncatedFile,
)
from monge.models import ImageStack, LinearMongeMap, ResultRow, SampleSet, SpdMatrix, SpectralMongeMap

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
GZIP_MAGIC = b'\x1f\x8b'
CSV_HEADER = ('experiment', 'd', 'n', 'n_l', 'trial', 'metric', 'value')
LINEAR_TAG = b'LMM1'
SPECTRAL_TAG = b'SMM1'

PathLike = Union[str, os.PathLike]


def _read_bytes(path: PathLike) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f'cannot read {path}: {exc.strerror or exc}') from exc
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise TruncatedFile(f'{path}: corrupt gzip stream ({exc})') from exc
    return raw


def _read_text(path: PathLike) -> str:
    try:
        return _read_bytes(path).decode('utf-8')
    except UnicodeDecodeError as exc:
        raise DataFormatError(f'{path}: not UTF-8 text ({exc.reason} at byte {exc.start})') from exc


def _write_atomic(path: PathLike, payload: bytes):
    # write next to the destination, then rename, so no partial file is left
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
        try:
            with os.fdopen(fd, 'wb') as handle:
                handle.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f'cannot write {path}: {exc.strerror or exc}') from exc
    logger.info('wrote %s', path)


def _idx_header(raw: bytes, path, magic: int, n_dims: int) -> tuple:
    header_size = 4 * (1 + n_dims)
    if len(raw) < 4:
        raise TruncatedFile(f'{path}: {len(raw)} bytes is shorter than an IDX magic')
    found = struct.unpack('>I', raw[:4])[0]
    if found != magic:
        raise BadMagic(f'{path}: magic 0x{found:08x}, expected 0x{magic:08x}')
    if len(raw) < header_size:
        raise TruncatedFile(f'{path}: header needs {header_size} bytes, file has {len(raw)}')
    dims = struct.unpack(f'>{n_dims}I', raw[4:header_size])
    expected = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header_size < expected:
        raise TruncatedFile(f'{path}: declares {expected} bytes of payload, has {len(raw) - header_size}')
    payload = np.frombuffer(raw, dtype=np.uint8, count=expected, offset=header_size)
    return dims, payload


def read_idx_images(path: PathLike) -> ImageStack:
    """
    Parse an IDX image file into pixels scaled to [0, 1]

    Raises:
        BadMagic: the magic is not 0x00000803
        TruncatedFile: fewer payload bytes than count·rows·cols
        IoError: the file cannot be read
    """
    raw = _read_bytes(path)
    (count, rows, cols), payload = _idx_header(raw, path, IDX_IMAGES_MAGIC, 3)
    pixels = payload.reshape(count, rows, cols).astype(np.float64) / 255.0
    logger.info('read %d images of %dx%d from %s', count, rows, cols, path)
    return ImageStack(pixels)


def read_idx_labels(path: PathLike) -> np.ndarray:
    """Parse an IDX label file (magic 0x00000801) into an int64 vector"""
    raw = _read_bytes(path)
    (count,), payload = _idx_header(raw, path, IDX_LABELS_MAGIC, 1)
    return payload.astype(np.int64)


def write_idx_images(path: PathLike, stack: ImageStack):
    """Write pixels (rounded to bytes) as an uncompressed IDX image file"""
    data = np.rint(stack.pixels * 255.0).astype(np.uint8)
    header = struct.pack('>IIII', IDX_IMAGES_MAGIC, stack.n, stack.height, stack.width)
    _write_atomic(path, header + data.tobytes())


def write_idx_labels(path: PathLike, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    _write_atomic(path, struct.pack('>II', IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())


def _read_head(path: PathLike, size: int) -> bytes:
    """First `size` bytes of the file, decompressed on the fly when gzipped"""
    try:
        with open(path, 'rb') as handle:
            if handle.read(2) != GZIP_MAGIC:
                handle.seek(0)
                return handle.read(size)
            handle.seek(0)
            with gzip.GzipFile(fileobj=handle) as stream:
                return stream.read(size)
    except (gzip.BadGzipFile, EOFError) as exc:
        raise TruncatedFile(f'{path}: corrupt gzip stream ({exc})') from exc
    except OSError as exc:
        raise IoError(f'cannot read {path}: {exc.strerror or exc}') from exc


def is_idx(path: PathLike) -> bool:
    """True when the file (after optional gunzip) starts with an IDX magic"""
    raw = _read_head(path, 4)
    return len(raw) >= 4 and struct.unpack('>I', raw[:4])[0] in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC)


def read_sample_csv(path: PathLike) -> SampleSet:
    """Headerless comma-separated rows of floats, one sample per row"""
    text = _read_text(path)
    rows = [line for line in text.splitlines() if line.strip()]
    try:
        data = np.array([[float(v) for v in line.split(',')] for line in rows], dtype=np.float64)
    except ValueError as exc:
        raise DimMismatch(f'{path}: malformed sample row ({exc})') from exc
    if data.ndim != 2:
        raise DimMismatch(f'{path}: rows have different lengths')
    return SampleSet(data)


def write_sample_csv(path: PathLike, rows: np.ndarray):
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    lines = [','.join(f'{v:.17g}' for v in row) for row in rows]
    _write_atomic(path, ('\n'.join(lines) + '\n').encode('utf-8'))


def load_samples(path: PathLike) -> Union[SampleSet, ImageStack]:
    """IDX image files become ImageStacks, anything else is read as sample CSV"""
    if is_idx(path):
        return read_idx_images(path)
    return read_sample_csv(path)


def _format_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return f'{value:.17g}'
    return str(value)


def write_csv(rows: Iterable[ResultRow], path: PathLike):
    """Write result rows with the fixed header, LF endings and 17 significant digits"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_format_cell(getattr(row, name)) for name in CSV_HEADER])
    _write_atomic(path, buffer.getvalue().encode('utf-8'))


def read_result_csv(path: PathLike) -> list:
    """Read a result CSV back into ResultRows"""
    text = _read_text(path)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise MapFormatError(f'{path}: unexpected header {header}')

    def optional_int(cell):
        return int(cell) if cell != '' else None

    return [
        ResultRow(experiment=experiment, d=int(d), n=optional_int(n), n_l=optional_int(n_l),
                  trial=optional_int(trial), metric=metric, value=float(value))
        for experiment, d, n, n_l, trial, metric, value in reader
    ]


def write_grid_csv(array: np.ndarray, path: PathLike):
    """One CSV line per array row (a 1D array is a single line)"""
    write_sample_csv(path, np.atleast_2d(array))


def write_pgm(array: np.ndarray, path: PathLike):
    """Plain (P2) grayscale image, values mapped linearly from [min, max] to [0, 255]"""
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    lo, hi = float(array.min()), float(array.max())
    scaled = np.zeros(array.shape, dtype=int) if hi == lo else np.rint(255.0 * (array - lo) / (hi - lo)).astype(int)
    lines = ['P2', f'{array.shape[1]} {array.shape[0]}', '255']
    lines += [' '.join(str(v) for v in row) for row in scaled]
    _write_atomic(path, ('\n'.join(lines) + '\n').encode('ascii'))


# Map artifacts

def save_map(map: Union[LinearMongeMap, SpectralMongeMap], path: PathLike):
    """Serialize a map as an LMM1 or SMM1 artifact (little-endian float64 payload)"""
    if isinstance(map, LinearMongeMap):
        header = LINEAR_TAG + struct.pack('<Qd', map.dim, map.alpha)
        arrays = (map.m1, map.m2, map.A.entries)
    else:
        shape = map.shape
        header = (SPECTRAL_TAG + struct.pack('<I', len(shape)) + struct.pack(f'<{len(shape)}Q', *shape)
                  + struct.pack('<d', map.alpha))
        arrays = (map.response, map.mean1, map.mean2)
    payload = b''.join(np.ascontiguousarray(a, dtype='<f8').tobytes() for a in arrays)
    _write_atomic(path, header + payload)


def _take(raw: bytes, offset: int, count: int, path) -> tuple:
    end = offset + 8 * count
    if end > len(raw):
        raise MapFormatError(f'{path}: map artifact truncated')
    return np.frombuffer(raw, dtype='<f8', count=count, offset=offset).astype(np.float64), end


def load_map(path: PathLike) -> Union[LinearMongeMap, SpectralMongeMap]:
    """Read a map artifact, dispatching on its 4-byte tag"""
    raw = _read_bytes(path)
    tag = raw[:4]
    try:
        if tag == LINEAR_TAG:
            dim, alpha = struct.unpack_from('<Qd', raw, 4)
            offset = 4 + 16
            m1, offset = _take(raw, offset, dim, path)
            m2, offset = _take(raw, offset, dim, path)
            A, offset = _take(raw, offset, dim * dim, path)
            result = LinearMongeMap(m1=m1, m2=m2, A=SpdMatrix(A.reshape(dim, dim)), alpha=alpha)
        elif tag == SPECTRAL_TAG:
            (ndim,) = struct.unpack_from('<I', raw, 4)
            shape = struct.unpack_from(f'<{ndim}Q', raw, 8)
            (alpha,) = struct.unpack_from('<d', raw, 8 + 8 * ndim)
            offset = 16 + 8 * ndim
            size = int(np.prod(shape))
            response, offset = _take(raw, offset, size, path)
            mean1, offset = _take(raw, offset, size, path)
            mean2, offset = _take(raw, offset, size, path)
            result = SpectralMongeMap(response=response.reshape(shape), mean1=mean1.reshape(shape),
                                      mean2=mean2.reshape(shape), alpha=alpha)
        else:
            raise MapFormatError(f'{path}: unknown map tag {tag!r}')
    except struct.error as exc:
        raise MapFormatError(f'{path}: map artifact truncated ({exc})') from exc
    if offset != len(raw):
        raise MapFormatError(f'{path}: {len(raw) - offset} trailing bytes after map payload')
    return result


# SVG plots

PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b', '#e377c2', '#17becf')
PLOT_WIDTH, PLOT_HEIGHT = 640, 420
MARGIN = {'left': 70, 'right': 150, 'top': 30, 'bottom': 50}

_templates = Environment(
    loader=PackageLoader('monge', 'templates'),
    autoescape=select_autoescape(['svg']),
    trim_blocks=True,
    lstrip_blocks=True,
)


class _Axis:
    """Affine map from data (or log10 data) to pixel coordinates"""

    def __init__(self, values: Sequence[float], log: bool, pixel_lo: float, pixel_hi: float):
        self.log = log
        if log:
            exponents = np.log10(values) if len(values) else np.array([0.0, 1.0])
            lo, hi = math.floor(exponents.min()), math.ceil(exponents.max())
            if lo == hi:
                hi = lo + 1
            self.lo, self.hi = float(lo), float(hi)
            self.ticks = [(10.0 ** k, f'1e{k}' if abs(k) > 3 else f'{10.0 ** k:g}') for k in range(lo, hi + 1)]
        else:
            lo, hi = (float(min(values)), float(max(values))) if len(values) else (0.0, 1.0)
            if lo == hi:
                lo, hi = lo - 1.0, hi + 1.0
            self.lo, self.hi = lo, hi
            self.ticks = [(v, f'{v:.3g}') for v in np.linspace(lo, hi, 5)]
        self.pixel_lo, self.pixel_hi = pixel_lo, pixel_hi

    def __call__(self, value: float) -> float:
        t = math.log10(value) if self.log else value
        return self.pixel_lo + (t - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)


def write_svg_lines(series: Mapping[str, tuple], log_axes: tuple, path: PathLike,
                    title: str = '', xlabel: str = '', ylabel: str = ''):
    """
    Render named (x, y) series as an SVG 1.1 line plot

    Args:
        series: name -> (xs, ys); xs strictly increasing
        log_axes: (log x, log y)
        path: output file

    Raises:
        InvalidSeries: lengths differ or xs not strictly increasing
        NonPositiveOnLogAxis: a value <= 0 on a log-scaled axis
    """
    all_x, all_y = [], []
    for name, (xs, ys) in series.items():
        xs, ys = list(map(float, xs)), list(map(float, ys))
        if len(xs) != len(ys):
            raise InvalidSeries(f'series {name!r}: {len(xs)} abscissae for {len(ys)} values')
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise InvalidSeries(f'series {name!r}: abscissae must be strictly increasing')
        for values, log, axis in ((xs, log_axes[0], 'x'), (ys, log_axes[1], 'y')):
            if log and any(v <= 0.0 for v in values):
                raise NonPositiveOnLogAxis(f'series {name!r}: non-positive {axis} on a log axis')
        all_x += xs
        all_y += ys

    left, top = MARGIN['left'], MARGIN['top']
    right = PLOT_WIDTH - MARGIN['right']
    bottom = PLOT_HEIGHT - MARGIN['bottom']
    x_axis = _Axis(all_x, log_axes[0], left, right)
    y_axis = _Axis(all_y, log_axes[1], bottom, top)

    lines = []
    for index, (name, (xs, ys)) in enumerate(series.items()):
        points = ' '.join(f'{x_axis(float(x)):.2f},{y_axis(float(y)):.2f}' for x, y in zip(xs, ys))
        lines.append({'name': name, 'color': PALETTE[index % len(PALETTE)], 'points': points})

    svg = _templates.get_template('lines.svg').render(
        width=PLOT_WIDTH, height=PLOT_HEIGHT, left=left, right=right, top=top, bottom=bottom,
        xticks=[(f'{x_axis(v):.2f}', label) for v, label in x_axis.ticks],
        yticks=[(f'{y_axis(v):.2f}', label) for v, label in y_axis.ticks],
        lines=lines, title=title, xlabel=xlabel, ylabel=ylabel,
    )
    _write_atomic(path, svg.encode('utf-8'))
