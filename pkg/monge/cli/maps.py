"""
`monge map` commands: fit, apply and export estimated Monge maps.
"""

import logging
from pathlib import Path

import click

from monge.config import Config
from monge.errors import MapFormatError
from monge.models import ImageStack, LinearMongeMap, SampleSet
from monge.services.convmap import fit_conv, inverse_conv, spatial_filter
from monge.services.dataio import load_map, load_samples, save_map, write_grid_csv, write_pgm, write_sample_csv
from monge.services.mapping import fit_empirical, inverse

logger = logging.getLogger(__name__)

FilePath = click.Path(dir_okay=False, path_type=Path)


def _rows(data) -> SampleSet:
    return data.as_samples() if isinstance(data, ImageStack) else data


def _stack(data):
    # images keep their 2D shape, CSV rows are 1D signals
    return data.pixels if isinstance(data, ImageStack) else data.rows


@click.group('map')
def group():
    """Fit, apply and export Monge maps."""


@group.command('fit')
@click.option('--source', required=True, type=FilePath, help='Source samples (CSV rows or IDX images).')
@click.option('--target', required=True, type=FilePath, help='Target samples (CSV rows or IDX images).')
@click.option('--alpha', type=click.FloatRange(0.0, 1.0), default=0.0, show_default=True,
              help='Shrinkage toward the identity.')
@click.option('--mode', type=click.Choice(['linear', 'conv']), default='linear', show_default=True)
@click.option('--out', required=True, type=FilePath, help='Map artifact to write.')
@click.option('--threads', envvar='MONGE_THREADS', type=click.IntRange(min=1), default=Config.THREADS,
              show_default=True, help='FFT worker threads.')
def fit(source, target, alpha, mode, out, threads):
    """Estimate a linear or convolutional Monge map from two sample files."""
    source_data = load_samples(source)
    target_data = load_samples(target)
    if mode == 'linear':
        fitted = fit_empirical(_rows(source_data), _rows(target_data), alpha=alpha)
    else:
        fitted = fit_conv(_stack(source_data), _stack(target_data), alpha=alpha, workers=threads)
    save_map(fitted, out)
    click.echo(f'Fitted {fitted!r} on {_rows(source_data).n} source and {_rows(target_data).n} '
               f'target samples -> {out}')


@group.command('apply')
@click.option('--map', 'map_path', required=True, type=FilePath, help='Map artifact (LMM1 or SMM1).')
@click.option('--input', 'input_path', required=True, type=FilePath, help='Samples to map.')
@click.option('--out', required=True, type=FilePath, help='CSV file for the mapped samples.')
@click.option('--inverse', 'invert', is_flag=True, help='Apply the inverse map instead.')
def apply(map_path, input_path, out, invert):
    """Map every sample of a file through a saved map."""
    fitted = load_map(map_path)
    if invert:
        fitted = inverse(fitted) if isinstance(fitted, LinearMongeMap) else inverse_conv(fitted)
    samples = _rows(load_samples(input_path))
    write_sample_csv(out, fitted.apply_rows(samples.rows))
    click.echo(f'Mapped {samples.n} samples through {fitted!r} -> {out}')


@group.command('filter')
@click.option('--map', 'map_path', required=True, type=FilePath, help='Spectral map artifact (SMM1).')
@click.option('--out', required=True, type=FilePath, help='CSV grid of the spatial filter.')
@click.option('--pgm', type=FilePath, default=None, help='Also write the filter as a PGM image.')
def filter_(map_path, out, pgm):
    """Export the impulse response of a convolutional map."""
    fitted = load_map(map_path)
    if isinstance(fitted, LinearMongeMap):
        raise MapFormatError(f'{map_path} holds a linear map; only convolutional maps have a filter')
    kernel = spatial_filter(fitted)
    write_grid_csv(kernel, out)
    if pgm is not None:
        write_pgm(kernel, pgm)
    click.echo(f'Exported {kernel.shape} filter -> {out}')
