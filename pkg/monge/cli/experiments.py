"""
`monge experiment`: run one Monte-Carlo driver and write its results.
"""

import logging
from pathlib import Path

import click

from monge.config import Config
from monge.errors import InvalidConfig
from monge.models import ExperimentConfig
from monge.services import experiments as drivers
from monge.services.dataio import read_idx_images, write_csv, write_svg_lines

logger = logging.getLogger(__name__)

# Per-kind defaults applied when a flag is not given
KIND_DEFAULTS = {
    drivers.MAPPING: {},
    drivers.DA: {'dims': Config.DA_DIMS},
    drivers.CONV: {'n_grid': Config.CONV_N_GRID, 'n_eval': Config.CONV_N_EVAL},
}


class IntList(click.ParamType):
    """Comma-separated positive integers, e.g. 100,1000,10000"""

    name = 'ints'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            return tuple(int(part) for part in str(value).split(',') if part.strip())
        except ValueError:
            self.fail(f'{value!r} is not a comma-separated list of integers', param, ctx)


@click.command('experiment')
@click.option('--kind', required=True, type=click.Choice(drivers.KINDS), help='Which experiment to run.')
@click.option('--seed', type=click.IntRange(min=0), default=None, help='Run seed (default MONGE_SEED).')
@click.option('--trials', type=click.IntRange(min=1), default=None, help='Monte-Carlo repetitions.')
@click.option('--dims', type=IntList(), default=None, help='Dimensions, comma-separated.')
@click.option('--n-grid', type=IntList(), default=None, help='Fit sample sizes, comma-separated.')
@click.option('--n-l-grid', type=IntList(), default=None, help='Labeled sample sizes (da only).')
@click.option('--n-eval', type=click.IntRange(min=1), default=None, help='Evaluation sample count.')
@click.option('--alpha', type=click.FloatRange(0.0, 1.0), default=None,
              help='Shrinkage (default 0 for simulations, 1e-6 for images).')
@click.option('--threads', envvar='MONGE_THREADS', type=click.IntRange(min=1), default=Config.THREADS,
              show_default=True, help='Trials run in parallel.')
@click.option('--out-dir', required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option('--images', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='IDX image file for the conv experiment.')
@click.option('--plots', is_flag=True, help='Also write an SVG plot.')
@click.option('--oracle-map', is_flag=True, help='Use the exact map instead of the estimate (da only).')
def experiment(kind, seed, trials, dims, n_grid, n_l_grid, n_eval, alpha, threads, out_dir, images, plots,
               oracle_map):
    """Run a convergence experiment and write <kind>.csv into OUT_DIR."""
    if images is not None and kind != drivers.CONV:
        raise click.UsageError('--images only applies to --kind conv')
    overrides = dict(KIND_DEFAULTS[kind])
    overrides.update({k: v for k, v in dict(seed=seed, trials=trials, dims=dims, n_grid=n_grid,
                                              n_l_grid=n_l_grid, n_eval=n_eval).items() if v is not None})
    try:
        cfg = ExperimentConfig.from_config(Config, alpha=alpha, threads=threads, oracle_map=oracle_map,
                                           output=out_dir, **overrides)
    except InvalidConfig as exc:
        raise click.UsageError(str(exc)) from exc

    stack = read_idx_images(images) if images is not None else None
    rows = drivers.run(kind, cfg, stack)

    csv_path = out_dir / f'{kind}.csv'
    write_csv(rows, csv_path)
    if plots:
        series, log_axes, xlabel, ylabel = drivers.plot_series(kind, rows)
        write_svg_lines(series, log_axes, out_dir / f'{kind}.svg', title=f'{kind} experiment',
                        xlabel=xlabel, ylabel=ylabel)
    for line in drivers.summarize(kind, rows):
        click.echo(line)
    click.echo(f'Wrote {len(rows)} rows -> {csv_path}')
