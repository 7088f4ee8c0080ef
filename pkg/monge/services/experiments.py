"""
Seeded Monte-Carlo drivers for the convergence experiments.

Every trial draws from its own substream make_rng(seed, experiment, d, trial),
so trials may run on any number of threads. Rows are sorted before they are
returned and aggregates are computed from the sorted rows, which keeps the
CSV output byte-identical across thread counts.
"""

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

import numpy as np
from scipy import fft

from monge.config import Config
from monge.errors import DimMismatch, InvalidConfig, InvalidSeries, MongeError, NonPositive
from monge.models import (
    ExperimentConfig, ImageStack, LabeledDataset, ResultRow, SampleSet, SpectralMongeMap,
)
from monge.services.classify import bayes_error_two_gaussians, error_rate, lda_fit, predict
from monge.services.convmap import fit_conv, spatial_filter
from monge.services.mapping import fit_empirical, fit_exact, inverse, transform
from monge.services.metrics import concentration_rate, mapping_divergence
from monge.services.sampler import (
    blur_stack, draw_da_target, embed_kernel, gaussian, kernel_response, make_da_problem,
    make_gaussian_pair, make_rng, motion_blur_kernel, radial_spectrum, stationary_image_stack,
)

logger = logging.getLogger(__name__)

MAPPING = 'mapping'
DA = 'da'
CONV = 'conv'
KINDS = (MAPPING, DA, CONV)


def fit_loglog_slope(points: Iterable[tuple]) -> float:
    """
    OLS slope of log(err) against log(n)

    Args:
        points: (n, err) pairs, all strictly positive

    Raises:
        NonPositive: a coordinate is <= 0
        InvalidSeries: fewer than two points
    """
    points = [(float(n), float(err)) for n, err in points]
    if len(points) < 2:
        raise InvalidSeries(f'a slope needs at least 2 points, got {len(points)}')
    if any(n <= 0.0 or err <= 0.0 for n, err in points):
        raise NonPositive(f'log-log fit needs positive coordinates, got {points}')
    logs = np.log(np.array(points))
    slope, _ = np.polyfit(logs[:, 0], logs[:, 1], 1)
    return float(slope)


def _run_trials(cfg: ExperimentConfig, jobs: List[tuple], trial_fn: Callable) -> List[ResultRow]:
    """Run trial_fn(*job) for every job, on cfg.threads threads, and sort the rows"""

    def guarded(job):
        try:
            return trial_fn(*job)
        except MongeError:
            logger.error('trial %s failed', job)
            raise

    if cfg.threads == 1:
        batches = [guarded(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            batches = list(pool.map(guarded, jobs))
    rows = [row for batch in batches for row in batch]
    return sorted(rows, key=ResultRow.sort_key)


def _aggregate(rows: List[ResultRow], metrics: tuple) -> List[ResultRow]:
    """Mean, median, 10th and 90th percentile across trials of each (d, n, n_l, metric)"""
    groups = defaultdict(list)
    for row in rows:
        if row.trial is not None and row.metric in metrics:
            groups[(row.experiment, row.d, row.n, row.n_l, row.metric)].append(row.value)
    summary = []
    for (experiment, d, n, n_l, metric), values in groups.items():
        values = np.array(values)
        for suffix, value in (('mean', values.mean()), ('median', np.median(values)),
                              ('p10', np.percentile(values, 10)), ('p90', np.percentile(values, 90))):
            summary.append(ResultRow(experiment, d, n, n_l, None, f'{metric}_{suffix}', value))
    return summary


def _median_curve(rows: List[ResultRow], d: int, metric: str, n_l=None) -> List[tuple]:
    return sorted(
        (row.n, row.value) for row in rows
        if row.d == d and row.metric == f'{metric}_median' and row.trial is None and row.n_l == n_l
    )


def _slope_row(experiment: str, d: int, metric: str, curve: List[tuple]) -> List[ResultRow]:
    if len(curve) < 2:
        return []
    return [ResultRow(experiment, d, None, None, None, metric, fit_loglog_slope(curve))]


def _feasible_sizes(grid: tuple, d: int, alpha: float, what: str, margin: int = 0) -> tuple:
    if alpha > 0.0:
        return grid
    kept = tuple(n for n in grid if n > d + margin)
    if len(kept) < len(grid):
        logger.warning('skipping %s %s for d=%d: singular covariance without shrinkage',
                       what, sorted(set(grid) - set(kept)), d)
    return kept


def run_mapping_convergence(cfg: ExperimentConfig) -> List[ResultRow]:
    """
    Mapping error d(T, T̂) as a function of n = n1 = n2 for each d

    Per trial a Gaussian pair is drawn; for each n fresh source and target
    samples are fitted and compared with the exact map on n_eval source draws.
    Records per-trial `divergence` and `rate_proxy`, per-(d, n) aggregates and
    the log-log slope of the median curve.
    """
    alpha = cfg.alpha_or(Config.SIM_ALPHA)
    logger.info('mapping convergence: dims=%s n_grid=%s trials=%d', cfg.dims, cfg.n_grid, cfg.trials)

    def trial(d: int, grid: tuple, index: int) -> List[ResultRow]:
        rng = make_rng(cfg.seed, MAPPING, d, index)
        m1, S1, m2, S2 = make_gaussian_pair(rng, d)
        exact = fit_exact(m1, S1, m2, S2)
        evaluation = gaussian(rng, m1, S1, cfg.n_eval)
        rows = []
        for n in grid:
            estimate = fit_empirical(gaussian(rng, m1, S1, n), gaussian(rng, m2, S2, n), alpha=alpha)
            divergence = mapping_divergence(exact, estimate, evaluation)
            rows.append(ResultRow(MAPPING, d, n, None, index, 'divergence', divergence.value))
            rows.append(ResultRow(MAPPING, d, n, None, index, 'rate_proxy', concentration_rate(S1, S2, n, n)))
        logger.debug('mapping trial d=%d #%d done', d, index)
        return rows

    jobs = []
    for d in cfg.dims:
        grid = _feasible_sizes(cfg.n_grid, d, alpha, 'n')
        jobs += [(d, grid, index) for index in range(cfg.trials)]
    rows = _run_trials(cfg, jobs, trial)
    aggregates = _aggregate(rows, ('divergence',))
    for d in cfg.dims:
        aggregates += _slope_row(MAPPING, d, 'loglog_slope', _median_curve(aggregates, d, 'divergence'))
    logger.info('mapping convergence finished: %d rows', len(rows) + len(aggregates))
    return sorted(rows + aggregates, key=ResultRow.sort_key)


def _da_points(cfg: ExperimentConfig, d: int, alpha: float) -> List[tuple]:
    """(n, n_l) pairs of both sweeps; each holds the other size at its maximum"""
    n_grid = _feasible_sizes(cfg.n_grid, d, alpha, 'n')
    n_l_grid = _feasible_sizes(cfg.n_l_grid, d, alpha, 'n_l', margin=1)
    if not n_grid or not n_l_grid:
        return []
    points = {(n, n_l_grid[-1]) for n in n_grid} | {(n_grid[-1], n_l) for n_l in n_l_grid}
    return sorted(points)


def run_da_convergence(cfg: ExperimentConfig) -> List[ResultRow]:
    """
    Domain adaptation error with an estimated Monge map, swept over n and n_l

    The classifier is trained on n_l labeled source samples and applied to
    target samples pulled back through T̂⁻¹ (`otda_error`). Also recorded:
    LDA trained on source samples pushed through T̂ (`mapped_source_error`),
    the analytic Bayes error, the unadapted source classifier and an LDA
    trained on source samples pushed through the true map.
    """
    alpha = cfg.alpha_or(Config.SIM_ALPHA)
    logger.info('domain adaptation: dims=%s n_grid=%s n_l_grid=%s trials=%d oracle_map=%s',
                cfg.dims, cfg.n_grid, cfg.n_l_grid, cfg.trials, cfg.oracle_map)

    def trial(d: int, points: List[tuple], index: int) -> List[ResultRow]:
        if d < 2:
            raise DimMismatch(f'domain adaptation needs d >= 2, got {d}')
        rng = make_rng(cfg.seed, DA, d, index)
        n_max = max(n for n, _ in points)
        n_l_max = max(n_l for _, n_l in points)
        problem = make_da_problem(rng, d, n_l_max, n_max)
        test = draw_da_target(rng, problem, cfg.n_eval)
        truth = problem.truth
        bayes = bayes_error_two_gaussians(problem.sigma0, np.ones(d))
        rows = [ResultRow(DA, d, None, None, index, 'bayes_error', bayes)]

        maps = {}
        for n, n_l in points:
            if n not in maps:
                maps[n] = truth if cfg.oracle_map else fit_empirical(
                    problem.source_unlab.head(n), problem.target_unlab.head(n), alpha=alpha)
            estimate = maps[n]
            labeled = problem.source.head(n_l)
            classifier = lda_fit(labeled, alpha)
            pulled_back = transform(inverse(estimate), test.X)
            mapped = LabeledDataset(transform(estimate, labeled.X), labeled.y)
            oracle = LabeledDataset(transform(truth, labeled.X), labeled.y)
            metrics = {
                'otda_error': error_rate(predict(classifier, pulled_back), test.y),
                'mapped_source_error': error_rate(predict(lda_fit(mapped, alpha), test.X), test.y),
                'no_adaptation_error': error_rate(predict(classifier, test.X), test.y),
                'target_oracle_error': error_rate(predict(lda_fit(oracle, alpha), test.X), test.y),
            }
            rows += [ResultRow(DA, d, n, n_l, index, name, value) for name, value in metrics.items()]
        return rows

    jobs = []
    for d in cfg.dims:
        points = _da_points(cfg, d, alpha)
        if not points:
            logger.warning('no feasible (n, n_l) for d=%d', d)
            continue
        jobs += [(d, points, index) for index in range(cfg.trials)]
    rows = _run_trials(cfg, jobs, trial)
    aggregates = _aggregate(rows, ('otda_error', 'mapped_source_error', 'no_adaptation_error',
                                   'target_oracle_error', 'bayes_error'))
    logger.info('domain adaptation finished: %d rows', len(rows) + len(aggregates))
    return sorted(rows + aggregates, key=ResultRow.sort_key)


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized inner product of two arrays"""
    a, b = a.ravel(), b.ravel()
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def run_conv_experiment(cfg: ExperimentConfig, images: Optional[ImageStack] = None) -> List[ResultRow]:
    """
    Linear vs convolutional map estimation against a motion blur

    Source images are either drawn from a synthetic stationary law or taken
    from `images` (which must hold 2·max(n_grid) + n_eval images). Targets are
    blurred independent images, so source and target fits are unpaired.

    The reference map is the Monge map between the source law and its blurred
    image: the circulant operator with response |H|, H the DFT of the kernel.
    Records `conv_divergence`, `linear_divergence`, `conv_filter_rmse`,
    `filter_correlation` (against the reference filter) and
    `kernel_correlation` (against the raw blur kernel).
    """
    alpha = cfg.alpha_or(Config.IMAGE_ALPHA)
    shape = (images.height, images.width) if images is not None else cfg.image_shape
    d = shape[0] * shape[1]
    n_max = cfg.n_grid[-1]
    if images is not None and images.n < 2 * n_max + cfg.n_eval:
        raise DimMismatch(f'{images.n} images, the protocol needs 2·{n_max} + {cfg.n_eval}')
    kernel = motion_blur_kernel(cfg.blur_length, cfg.blur_angle)
    reference_response = np.abs(kernel_response(kernel, shape))
    kernel_image = fft.fftshift(embed_kernel(kernel, shape))
    spectrum = radial_spectrum(shape)
    logger.info('conv experiment: shape=%s n_grid=%s trials=%d alpha=%g source=%s',
                shape, cfg.n_grid, cfg.trials, alpha, 'images' if images is not None else 'synthetic')

    def trial(index: int) -> List[ResultRow]:
        rng = make_rng(cfg.seed, CONV, d, index)
        if images is None:
            pool = stationary_image_stack(rng, shape, spectrum, 2 * n_max + cfg.n_eval)
            source_mean = np.zeros(shape)
        else:
            pool = images.pixels[rng.permutation(images.n)[:2 * n_max + cfg.n_eval]]
            source_mean = images.pixels.mean(axis=0)
        source = pool[:n_max]
        target = blur_stack(pool[n_max:2 * n_max], kernel)
        evaluation = SampleSet(pool[2 * n_max:].reshape(cfg.n_eval, d))
        reference = SpectralMongeMap(response=reference_response, mean1=source_mean,
                                     mean2=blur_stack(source_mean[None], kernel)[0])
        reference_filter = spatial_filter(reference)

        rows = []
        for n in cfg.n_grid:
            conv = fit_conv(source[:n], target[:n], alpha=alpha)
            linear = fit_empirical(SampleSet(source[:n].reshape(n, d)), SampleSet(target[:n].reshape(n, d)),
                                   alpha=alpha)
            fitted_filter = spatial_filter(conv)
            metrics = {
                'conv_divergence': mapping_divergence(reference, conv, evaluation).value,
                'linear_divergence': mapping_divergence(reference, linear, evaluation).value,
                'conv_filter_rmse': float(np.sqrt(np.mean((conv.response - reference_response) ** 2))),
                'filter_correlation': _correlation(fitted_filter, reference_filter),
                'kernel_correlation': _correlation(fitted_filter, kernel_image),
            }
            rows += [ResultRow(CONV, d, n, None, index, name, value) for name, value in metrics.items()]
            logger.debug('conv trial #%d n=%d conv=%.4g linear=%.4g', index, n,
                         metrics['conv_divergence'], metrics['linear_divergence'])
        return rows

    rows = _run_trials(cfg, [(index,) for index in range(cfg.trials)], trial)
    aggregates = _aggregate(rows, ('conv_divergence', 'linear_divergence', 'conv_filter_rmse',
                                   'filter_correlation', 'kernel_correlation'))
    aggregates += _slope_row(CONV, d, 'conv_loglog_slope', _median_curve(aggregates, d, 'conv_divergence'))
    aggregates += _slope_row(CONV, d, 'linear_loglog_slope', _median_curve(aggregates, d, 'linear_divergence'))
    logger.info('conv experiment finished: %d rows', len(rows) + len(aggregates))
    return sorted(rows + aggregates, key=ResultRow.sort_key)


def run(kind: str, cfg: ExperimentConfig, images: Optional[ImageStack] = None) -> List[ResultRow]:
    """Dispatch on experiment kind"""
    if kind == MAPPING:
        return run_mapping_convergence(cfg)
    if kind == DA:
        return run_da_convergence(cfg)
    if kind == CONV:
        return run_conv_experiment(cfg, images)
    raise InvalidConfig(f'unknown experiment kind {kind!r}; expected one of {KINDS}')


def _lookup(rows: List[ResultRow], **match) -> dict:
    return {
        (row.d, row.n, row.n_l): row.value for row in rows
        if row.trial is None and all(getattr(row, k) == v for k, v in match.items())
    }


def summarize(kind: str, rows: List[ResultRow]) -> List[str]:
    """One human-readable line per dimension"""
    lines = []
    for d in sorted({row.d for row in rows}):
        if kind == MAPPING:
            curve = sorted((n, v) for (dd, n, _), v in _lookup(rows, metric='divergence_median').items() if dd == d)
            slope = _lookup(rows, metric='loglog_slope').get((d, None, None))
            if not curve:
                continue
            slope_text = f'{slope:.3f}' if slope is not None else 'n/a'
            lines.append(f'mapping d={d}: median divergence {curve[0][1]:.4g} at n={curve[0][0]} -> '
                         f'{curve[-1][1]:.4g} at n={curve[-1][0]}, log-log slope {slope_text}')
        elif kind == DA:
            otda = {k: v for k, v in _lookup(rows, metric='otda_error_median').items() if k[0] == d}
            if not otda:
                continue
            key = max(otda)
            bayes = _lookup(rows, metric='bayes_error_median').get((d, None, None), float('nan'))
            no_adapt = _lookup(rows, metric='no_adaptation_error_median').get(key, float('nan'))
            mapped = _lookup(rows, metric='mapped_source_error_median').get(key, float('nan'))
            lines.append(f'da d={d}: otda error {otda[key]:.4f} at n={key[1]} n_l={key[2]} '
                         f'(mapped source {mapped:.4f}, bayes {bayes:.4f}, no adaptation {no_adapt:.4f})')
        elif kind == CONV:
            conv = _lookup(rows, metric='conv_divergence_median')
            linear = _lookup(rows, metric='linear_divergence_median')
            keys = sorted(k for k in conv if k[0] == d)
            if not keys:
                continue
            key = keys[-1]
            slope = _lookup(rows, metric='conv_loglog_slope').get((d, None, None))
            slope_text = f'{slope:.3f}' if slope is not None else 'n/a'
            lines.append(f'conv d={d}: at n={key[1]} conv error {conv[key]:.4g}, linear error '
                         f'{linear.get(key, float("nan")):.4g}, conv log-log slope {slope_text}')
    return lines


def plot_series(kind: str, rows: List[ResultRow]) -> tuple:
    """
    Named median curves for an SVG plot

    Returns:
        tuple: (series, log_axes, xlabel, ylabel) where series maps a name
        to (xs, ys)
    """
    series = {}
    if kind == MAPPING:
        for (d, n, _), value in sorted(_lookup(rows, metric='divergence_median').items()):
            xs, ys = series.setdefault(f'd={d}', ([], []))
            xs.append(n)
            ys.append(value)
        return series, (True, True), 'n', 'd(T, T_hat)'
    if kind == DA:
        for metric in ('otda_error_median', 'mapped_source_error_median', 'target_oracle_error_median'):
            values = _lookup(rows, metric=metric)
            for d in sorted({k[0] for k in values}):
                n_l_max = max(k[2] for k in values if k[0] == d)
                xs, ys = series.setdefault(f'{metric[:-len("_median")]} d={d}', ([], []))
                for (dd, n, n_l), value in sorted(values.items()):
                    if dd == d and n_l == n_l_max:
                        xs.append(n)
                        ys.append(value)
        return series, (True, False), 'n', 'target error rate'
    if kind == CONV:
        for metric in ('conv_divergence_median', 'linear_divergence_median'):
            for (d, n, _), value in sorted(_lookup(rows, metric=metric).items()):
                xs, ys = series.setdefault(f'{metric.split("_")[0]} d={d}', ([], []))
                xs.append(n)
                ys.append(value)
        return series, (True, True), 'n', 'd(T, T_hat)'
    raise InvalidConfig(f'unknown experiment kind {kind!r}; expected one of {KINDS}')
