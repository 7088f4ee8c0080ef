"""Tests for monge.services.metrics"""

import math

import numpy as np
import pytest

from monge.errors import DimMismatch, NotPositiveDefinite, UnknownLoss
from monge.models import LabeledDataset, LinearMongeMap, SampleSet, SpdMatrix
from monge.services.classify import lda_fit
from monge.services.mapping import fit_empirical, fit_exact
from monge.services.metrics import (
    bures_wasserstein_sq, concentration_rate, da_bound_audit, mapping_divergence, surrogate_loss,
)
from monge.services.sampler import draw_da_source, gaussian, make_da_problem, make_gaussian_pair, make_rng


def identity_map(d: int, shift=None) -> LinearMongeMap:
    shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
    return LinearMongeMap(m1=np.zeros(d), m2=shift, A=SpdMatrix(np.eye(d)))


class TestMappingDivergence:
    def test_same_map_is_zero(self, rng):
        X = SampleSet(rng.standard_normal((100, 3)))
        T = identity_map(3, [1.0, 2.0, 3.0])
        estimate = mapping_divergence(T, T, X)
        assert estimate.value == 0.0
        assert estimate.stderr == 0.0

    def test_constant_gap(self, rng):
        X = SampleSet(rng.standard_normal((1000, 2)))
        estimate = mapping_divergence(identity_map(2), identity_map(2, [3.0, 4.0]), X)
        assert estimate.value == pytest.approx(5.0)
        assert estimate.stderr == pytest.approx(0.0, abs=1e-12)
        assert estimate.n_eval == 1000

    def test_chunking_does_not_change_value(self, rng):
        X = SampleSet(rng.standard_normal((1001, 4)))
        T = identity_map(4)
        T2 = fit_exact(np.zeros(4), np.eye(4), np.ones(4), np.diag([1.0, 4.0, 9.0, 16.0]))
        whole = mapping_divergence(T, T2, X, chunk_size=5000)
        pieces = mapping_divergence(T, T2, X, chunk_size=7)
        assert whole.value == pytest.approx(pieces.value, rel=1e-12)

    def test_dim_mismatch(self, rng):
        with pytest.raises(DimMismatch):
            mapping_divergence(identity_map(2), identity_map(2), SampleSet(rng.standard_normal((5, 3))))

    def test_estimated_map_gap_shrinks_with_n(self):
        gaps = {n: [] for n in (100, 1000, 10000)}
        for seed in range(5):
            rng = make_rng(seed, 'divergence vs n')
            m1, S1, m2, S2 = make_gaussian_pair(rng, 3)
            exact = fit_exact(m1, S1, m2, S2)
            X = gaussian(rng, m1, S1, 2000)
            for n in gaps:
                estimate = fit_empirical(gaussian(rng, m1, S1, n), gaussian(rng, m2, S2, n))
                gaps[n].append(mapping_divergence(exact, estimate, X).value)
        medians = [np.median(gaps[n]) for n in (100, 1000, 10000)]
        assert medians[0] > medians[1] > medians[2]


class TestBuresWasserstein:
    def test_identical(self, spd_factory):
        S = spd_factory(4)
        assert bures_wasserstein_sq(np.ones(4), S, np.ones(4), S) == pytest.approx(0.0, abs=1e-10)

    def test_mean_shift_only(self):
        assert bures_wasserstein_sq(np.zeros(2), np.eye(2), np.array([3.0, 4.0]), np.eye(2)) == pytest.approx(25.0)

    def test_commuting_covariances(self):
        value = bures_wasserstein_sq(np.zeros(2), np.diag([4.0, 1.0]), np.zeros(2), np.diag([9.0, 16.0]))
        assert value == pytest.approx(10.0)

    def test_symmetric_in_arguments(self, rng, spd_factory):
        m1, m2 = rng.standard_normal(3), rng.standard_normal(3)
        S1, S2 = spd_factory(3), spd_factory(3)
        assert bures_wasserstein_sq(m1, S1, m2, S2) == pytest.approx(bures_wasserstein_sq(m2, S2, m1, S1))

    def test_accepts_singular_psd(self):
        value = bures_wasserstein_sq(np.zeros(2), np.diag([1.0, 0.0]), np.zeros(2), np.diag([4.0, 0.0]))
        assert value == pytest.approx(1.0)

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(NotPositiveDefinite):
            bures_wasserstein_sq(np.zeros(2), np.diag([1.0, -0.5]), np.zeros(2), np.eye(2))

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            bures_wasserstein_sq(np.zeros(2), np.eye(2), np.zeros(3), np.eye(3))


class TestConcentrationRate:
    def test_identity_covariances(self):
        # r(I_d) = d, so the rate is √(d/n)·√d for n >= 1
        assert concentration_rate(np.eye(4), np.eye(4), 100, 100) == pytest.approx(math.sqrt(4 / 100) * 2.0)

    def test_decreases_with_n(self, spd_factory):
        S1, S2 = spd_factory(5), spd_factory(5)
        rates = [concentration_rate(S1, S2, n, n) for n in (10, 100, 1000)]
        assert rates[0] > rates[1] > rates[2]


class TestSurrogateLoss:
    def test_hinge(self):
        np.testing.assert_allclose(surrogate_loss('hinge', np.array([1, 0, 1]), np.array([2.0, 0.5, -1.0])),
                                   [0.0, 1.5, 2.0])

    def test_absolute(self):
        np.testing.assert_allclose(surrogate_loss('absolute', np.array([1, 0]), np.array([0.5, 0.5])),
                                   [0.5, 1.5])

    def test_unknown(self):
        with pytest.raises(UnknownLoss):
            surrogate_loss('logistic', np.array([1]), np.array([0.0]))


class TestBoundAudit:
    def test_exact_map_makes_bound_tight(self, rng):
        source = draw_da_source(rng, SpdMatrix(np.eye(3)), 200)
        T = identity_map(3, [1.0, -1.0, 2.0])
        audit = da_bound_audit((np.array([1.0, 0.5, -0.5]), 0.1), 'hinge', T, T, source)
        assert audit.lhs == pytest.approx(audit.source_risk)
        assert audit.rhs == pytest.approx(audit.source_risk)
        assert audit.divergence.value == 0.0

    def test_unknown_loss(self, rng):
        source = draw_da_source(rng, SpdMatrix(np.eye(2)), 10)
        with pytest.raises(UnknownLoss):
            da_bound_audit((np.ones(2), 0.0), 'squared', identity_map(2), identity_map(2), source)

    def test_bound_holds_over_trials(self):
        for trial in range(20):
            rng = make_rng(2024, 'bound', trial)
            problem = make_da_problem(rng, 5, 500, 200)
            estimate = fit_empirical(problem.source_unlab, problem.target_unlab)
            scorer = lda_fit(problem.source)
            audit = da_bound_audit(scorer, 'hinge', problem.truth, estimate, problem.source)
            assert audit.lhs <= audit.rhs + 2.0 * audit.lhs_stderr
            assert audit.lhs <= audit.transport_rhs + 1e-9 * (1.0 + abs(audit.transport_rhs))
            assert audit.transport_rhs <= audit.rhs + 1e-9 * (1.0 + abs(audit.rhs))
