"""Tests for monge.services.experiments"""

import math

import pytest

from monge.errors import DimMismatch, InvalidConfig, InvalidSeries, NonPositive
from monge.models import ExperimentConfig, ImageStack
from monge.services import experiments
from monge.services.experiments import fit_loglog_slope, plot_series, run, summarize


def tiny_mapping_config(**overrides) -> ExperimentConfig:
    values = dict(seed=3, dims=(2, 3), n_grid=(50, 200), trials=2, n_eval=500)
    values.update(overrides)
    return ExperimentConfig(**values)


def by_metric(rows, metric, per_trial=True):
    return [row for row in rows if row.metric == metric and (row.trial is not None) == per_trial]


class TestLogLogSlope:
    def test_inverse_square_root(self):
        assert fit_loglog_slope([(1, 1.0), (100, 0.1)]) == pytest.approx(-0.5)

    def test_flat(self):
        assert fit_loglog_slope([(10, 2.0), (100, 2.0), (1000, 2.0)]) == pytest.approx(0.0, abs=1e-12)

    def test_three_points(self):
        assert fit_loglog_slope([(1, 1.0), (10, 0.1), (100, 0.01)]) == pytest.approx(-1.0)

    def test_non_positive(self):
        with pytest.raises(NonPositive):
            fit_loglog_slope([(1, 1.0), (10, 0.0)])

    def test_single_point(self):
        with pytest.raises(InvalidSeries):
            fit_loglog_slope([(1, 1.0)])


class TestMappingConvergence:
    def test_row_layout(self):
        rows = run(experiments.MAPPING, tiny_mapping_config())
        divergences = by_metric(rows, 'divergence')
        assert len(divergences) == 2 * 2 * 2
        assert all(0.0 < row.value < math.inf for row in divergences)
        assert len(by_metric(rows, 'rate_proxy')) == 8
        assert len(by_metric(rows, 'divergence_median', per_trial=False)) == 4
        slopes = by_metric(rows, 'loglog_slope', per_trial=False)
        assert [row.d for row in slopes] == [2, 3]
        assert all(row.n is None for row in slopes)
        assert rows == sorted(rows, key=lambda row: row.sort_key())

    def test_thread_count_does_not_change_rows(self):
        serial = run(experiments.MAPPING, tiny_mapping_config(threads=1))
        threaded = run(experiments.MAPPING, tiny_mapping_config(threads=8))
        assert serial == threaded

    def test_median_divergence_decreases_along_grid(self):
        cfg = tiny_mapping_config(dims=(2,), n_grid=(50, 500, 5000), trials=5, n_eval=2000)
        rows = run(experiments.MAPPING, cfg)
        medians = [row.value for row in by_metric(rows, 'divergence_median', per_trial=False)]
        assert len(medians) == 3
        assert medians[0] > medians[1] > medians[2]

    def test_seed_changes_rows(self):
        assert run(experiments.MAPPING, tiny_mapping_config(dims=(2,))) != \
            run(experiments.MAPPING, tiny_mapping_config(dims=(2,), seed=4))

    def test_undersampled_sizes_are_skipped(self):
        cfg = tiny_mapping_config(dims=(5,), n_grid=(3, 5, 50), trials=1, alpha=0.0)
        rows = run(experiments.MAPPING, cfg)
        assert {row.n for row in by_metric(rows, 'divergence')} == {50}

    def test_shrinkage_keeps_small_sizes(self):
        cfg = tiny_mapping_config(dims=(5,), n_grid=(3, 50), trials=1, alpha=0.1)
        rows = run(experiments.MAPPING, cfg)
        assert {row.n for row in by_metric(rows, 'divergence')} == {3, 50}

    def test_summary_and_plot(self):
        rows = run(experiments.MAPPING, tiny_mapping_config())
        lines = summarize(experiments.MAPPING, rows)
        assert len(lines) == 2
        assert lines[0].startswith('mapping d=2')
        series, log_axes, _, _ = plot_series(experiments.MAPPING, rows)
        assert set(series) == {'d=2', 'd=3'}
        assert series['d=2'][0] == [50, 200]
        assert log_axes == (True, True)


class TestDomainAdaptation:
    def config(self, **overrides):
        values = dict(seed=1, dims=(2,), n_grid=(50, 200), n_l_grid=(20, 100), trials=2, n_eval=2000)
        values.update(overrides)
        return ExperimentConfig(**values)

    def test_row_layout(self):
        rows = run(experiments.DA, self.config())
        otda = by_metric(rows, 'otda_error')
        assert sorted({(row.n, row.n_l) for row in otda}) == [(50, 100), (200, 20), (200, 100)]
        for metric in ('otda_error', 'mapped_source_error', 'no_adaptation_error', 'target_oracle_error'):
            values = [row.value for row in by_metric(rows, metric)]
            assert len(values) == 2 * 3
            assert all(0.0 <= v <= 1.0 for v in values)
        bayes = by_metric(rows, 'bayes_error')
        assert len(bayes) == 2
        assert all(row.n is None and 0.0 < row.value < 0.5 for row in bayes)

    def test_oracle_map(self):
        rows = run(experiments.DA, self.config(oracle_map=True, trials=1))
        otda = {(row.n, row.n_l): row.value for row in by_metric(rows, 'otda_error')}
        # with the true map the error no longer depends on n
        assert otda[(50, 100)] == otda[(200, 100)]

    def test_one_dimension_is_rejected(self):
        with pytest.raises(DimMismatch):
            run(experiments.DA, self.config(dims=(1,), trials=1))

    def test_summary_and_plot(self):
        rows = run(experiments.DA, self.config())
        (line,) = summarize(experiments.DA, rows)
        assert line.startswith('da d=2: otda error')
        series, log_axes, _, _ = plot_series(experiments.DA, rows)
        assert series['otda_error d=2'][0] == [50, 200]
        assert log_axes == (True, False)


class TestConvExperiment:
    def config(self, **overrides):
        values = dict(seed=2, n_grid=(20, 80), n_eval=100, trials=1, image_shape=(8, 8))
        values.update(overrides)
        return ExperimentConfig(**values)

    def test_synthetic_rows(self):
        rows = run(experiments.CONV, self.config())
        assert {row.d for row in rows} == {64}
        for metric in ('conv_divergence', 'linear_divergence', 'conv_filter_rmse'):
            values = [row.value for row in by_metric(rows, metric)]
            assert len(values) == 2
            assert all(v >= 0.0 for v in values)
        assert all(abs(row.value) <= 1.0 + 1e-12 for row in by_metric(rows, 'filter_correlation'))
        assert len(by_metric(rows, 'conv_loglog_slope', per_trial=False)) == 1

    def test_image_source(self, rng):
        images = ImageStack(rng.uniform(size=(2 * 20 + 10, 8, 8)))
        rows = run(experiments.CONV, self.config(n_grid=(10, 20), n_eval=10), images)
        assert len(by_metric(rows, 'conv_divergence')) == 2

    def test_too_few_images(self, rng):
        images = ImageStack(rng.uniform(size=(30, 8, 8)))
        with pytest.raises(DimMismatch):
            run(experiments.CONV, self.config(), images)

    def test_summary(self):
        rows = run(experiments.CONV, self.config())
        (line,) = summarize(experiments.CONV, rows)
        assert line.startswith('conv d=64: at n=80')

    def test_conv_error_falls_with_more_images(self):
        rows = run(experiments.CONV, self.config(n_grid=(10, 100), n_eval=200, trials=3))
        medians = {row.n: row.value for row in by_metric(rows, 'conv_divergence_median', per_trial=False)}
        assert medians[100] < medians[10]
        (slope,) = by_metric(rows, 'conv_loglog_slope', per_trial=False)
        assert slope.value < 0.0


def test_unknown_kind():
    with pytest.raises(InvalidConfig):
        run('sinkhorn', tiny_mapping_config())


@pytest.mark.slow
class TestAcceptance:
    """Full-size runs; select with `pytest -m slow`"""

    @pytest.mark.parametrize('d', [2, 10])
    def test_mapping_rate(self, d):
        cfg = ExperimentConfig(seed=0, dims=(d,), n_grid=(100, 316, 1000, 3162, 10000), trials=10,
                               n_eval=100000, threads=4)
        rows = run(experiments.MAPPING, cfg)
        (slope,) = by_metric(rows, 'loglog_slope', per_trial=False)
        assert -0.65 <= slope.value <= -0.35

    def test_domain_adaptation_reaches_bayes(self):
        cfg = ExperimentConfig(seed=0, dims=(10,), n_grid=(1000, 10000), n_l_grid=(1000, 10000), trials=10,
                               n_eval=20000, threads=4)
        rows = run(experiments.DA, cfg)
        medians = {row.metric: row.value for row in rows
                   if row.trial is None and row.n == 10000 and row.n_l == 10000}
        (bayes,) = [row.value for row in rows if row.metric == 'bayes_error_median']
        assert medians['otda_error_median'] - bayes <= 0.02
        assert medians['no_adaptation_error_median'] >= 0.4

    def test_conv_beats_linear_on_few_images(self):
        cfg = ExperimentConfig(seed=0, n_grid=(10, 100, 316, 1000), n_eval=500, trials=2, threads=2)
        rows = run(experiments.CONV, cfg)
        medians = {(row.metric, row.n): row.value for row in rows if row.trial is None}
        for n in (10, 100, 316):
            assert medians[('conv_divergence_median', n)] < medians[('linear_divergence_median', n)]
        assert medians[('filter_correlation_median', 1000)] >= 0.9
        # the reference response is |H|, whose filter differs from the raw kernel
        assert 0.8 <= medians[('kernel_correlation_median', 1000)] < 0.95
