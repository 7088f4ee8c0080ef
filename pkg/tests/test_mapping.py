"""Tests for monge.services.mapping"""

import numpy as np
import pytest

from monge.errors import DimMismatch, SingularSource
from monge.models import SampleSet, SpdMatrix
from monge.services.mapping import fit_empirical, fit_exact, inverse, operator_norm, transform
from monge.services.metrics import bures_wasserstein_sq, mapping_divergence
from monge.services.moments import estimate_moments
from monge.services.sampler import gaussian, make_gaussian_pair, make_rng
from tests.conftest import well_conditioned_spd


class TestFitExact:
    def test_identical_laws_give_identity(self, spd_factory):
        S = spd_factory(4)
        m = np.arange(4.0)
        T = fit_exact(m, S, m, S)
        np.testing.assert_allclose(T.A.entries, np.eye(4), atol=1e-10)

    def test_diagonal_ratio(self):
        T = fit_exact(np.zeros(2), np.diag([4.0, 1.0]), np.ones(2), np.diag([9.0, 16.0]))
        np.testing.assert_allclose(T.A.entries, np.diag([1.5, 4.0]), atol=1e-12)
        np.testing.assert_allclose(T.apply_rows(np.array([[2.0, 1.0]])), [[4.0, 5.0]])

    def test_pure_translation(self):
        T = fit_exact(np.zeros(2), np.eye(2), np.array([3.0, 4.0]), np.eye(2))
        np.testing.assert_allclose(T.apply_rows(np.array([[1.0, 1.0]])), [[4.0, 5.0]], atol=1e-12)

    @pytest.mark.parametrize('d', [2, 5, 10])
    def test_pushforward_matches_target(self, d):
        for seed in range(20):
            rng = make_rng(seed, 'pushforward', d)
            m1, S1, m2, S2 = make_gaussian_pair(rng, d)
            T = fit_exact(m1, S1, m2, S2)
            A = T.A.entries
            pushed = A @ S1.entries @ A
            assert np.linalg.norm(pushed - S2.entries) <= 1e-8 * np.linalg.norm(S2.entries)
            assert bures_wasserstein_sq(T.apply_rows(m1[None])[0], pushed, m2, S2) <= 1e-8

    @pytest.mark.parametrize('d', [20, 50])
    def test_pushforward_high_dim(self, d):
        for seed in range(20):
            rng = make_rng(seed, 'pushforward', d)
            S1, S2 = well_conditioned_spd(rng, d), well_conditioned_spd(rng, d)
            A = fit_exact(np.zeros(d), S1, np.zeros(d), S2).A.entries
            pushed = A @ S1.entries @ A
            assert np.linalg.norm(pushed - S2.entries) <= 1e-8 * np.linalg.norm(S2.entries)

    def test_map_matrix_is_symmetric(self, spd_factory):
        T = fit_exact(np.zeros(6), spd_factory(6), np.zeros(6), spd_factory(6))
        np.testing.assert_array_equal(T.A.entries, T.A.entries.T)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            fit_exact(np.zeros(2), np.eye(2), np.zeros(3), np.eye(3))

    def test_monte_carlo_pushforward(self):
        rng = make_rng(11, 'monte-carlo pushforward')
        m1, S1, m2, S2 = make_gaussian_pair(rng, 3)
        T = fit_exact(m1, S1, m2, S2)
        pushed = estimate_moments(transform(T, gaussian(rng, m1, S1, 100000)))
        assert np.linalg.norm(pushed.cov - S2.entries) <= 0.05 * np.linalg.norm(S2.entries)
        assert np.linalg.norm(pushed.mean - m2) <= 0.05 * max(np.linalg.norm(m2), 1.0)

    def test_swapped_laws_give_the_inverse(self, rng, spd_factory):
        m1, m2 = rng.standard_normal(4), rng.standard_normal(4)
        S1, S2 = spd_factory(4), spd_factory(4)
        forward = fit_exact(m1, S1, m2, S2)
        backward = fit_exact(m2, S2, m1, S1)
        np.testing.assert_allclose(backward.A.entries @ forward.A.entries, np.eye(4), atol=1e-9)
        X = rng.standard_normal((25, 4))
        np.testing.assert_allclose(backward.apply_rows(forward.apply_rows(X)), X, atol=1e-9)


class TestFitEmpirical:
    def test_self_fit_is_identity(self, rng):
        X = SampleSet(rng.standard_normal((200, 3)))
        T = fit_empirical(X, X)
        np.testing.assert_allclose(T.A.entries, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(T.apply_rows(X.rows), X.rows, atol=1e-9)

    def test_converges_to_exact_map(self):
        rng = make_rng(3, 'empirical')
        m1, S1 = np.zeros(2), SpdMatrix(np.diag([4.0, 1.0]))
        m2, S2 = np.ones(2), SpdMatrix(np.diag([9.0, 16.0]))
        exact = fit_exact(m1, S1, m2, S2)
        estimate = fit_empirical(gaussian(rng, m1, S1, 5000), gaussian(rng, m2, S2, 5000))
        assert mapping_divergence(exact, estimate, gaussian(rng, m1, S1, 20000)).value < 0.5

    def test_median_error_shrinks_with_n(self):
        errors = {n: [] for n in (100, 1000, 10000)}
        for seed in range(10):
            rng = make_rng(seed, 'estimator error', 3)
            m1, S1, m2, S2 = make_gaussian_pair(rng, 3)
            A = fit_exact(m1, S1, m2, S2).A.entries
            for n in errors:
                estimate = fit_empirical(gaussian(rng, m1, S1, n), gaussian(rng, m2, S2, n))
                errors[n].append(np.linalg.norm(estimate.A.entries - A, 2))
        medians = [np.median(errors[n]) for n in (100, 1000, 10000)]
        assert medians[0] >= medians[1] >= medians[2]

    def test_output_moments_match_target(self, rng):
        Xs = SampleSet(rng.standard_normal((500, 3)) @ np.diag([1.0, 2.0, 0.5]))
        Xt = SampleSet(rng.standard_normal((400, 3)) + 5.0)
        mapped = estimate_moments(transform(fit_empirical(Xs, Xt), Xs))
        target = estimate_moments(Xt)
        np.testing.assert_allclose(mapped.mean, target.mean, atol=1e-9)
        np.testing.assert_allclose(mapped.cov, target.cov, atol=1e-9)

    def test_too_few_samples_without_shrinkage(self, rng):
        with pytest.raises(SingularSource):
            fit_empirical(SampleSet(rng.standard_normal((3, 5))), SampleSet(rng.standard_normal((10, 5))))

    def test_shrinkage_rescues_few_samples(self, rng):
        T = fit_empirical(SampleSet(rng.standard_normal((3, 5))), SampleSet(rng.standard_normal((3, 5))),
                          alpha=0.1)
        assert T.alpha == 0.1
        assert T.A.lambda_min > 0.0

    def test_collinear_source(self):
        rows = np.outer(np.arange(10.0), [1.0, 2.0])
        with pytest.raises(SingularSource):
            fit_empirical(SampleSet(rows), SampleSet(np.random.default_rng(0).standard_normal((10, 2))))

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimMismatch):
            fit_empirical(SampleSet(rng.standard_normal((10, 2))), SampleSet(rng.standard_normal((10, 3))))


class TestInverse:
    def test_round_trip(self, rng, spd_factory):
        T = fit_exact(rng.standard_normal(4), spd_factory(4), rng.standard_normal(4), spd_factory(4))
        X = rng.standard_normal((20, 4))
        np.testing.assert_allclose(inverse(T).apply_rows(T.apply_rows(X)), X, atol=1e-10)

    def test_operator_norm(self):
        T = fit_exact(np.zeros(2), np.diag([4.0, 1.0]), np.zeros(2), np.diag([9.0, 16.0]))
        assert operator_norm(T) == pytest.approx(4.0)
        assert operator_norm(inverse(T)) == pytest.approx(1.0 / 1.5)

    def test_transform_dim_mismatch(self):
        T = fit_exact(np.zeros(2), np.eye(2), np.zeros(2), np.eye(2))
        with pytest.raises(DimMismatch):
            transform(T, SampleSet(np.zeros((3, 3))))
