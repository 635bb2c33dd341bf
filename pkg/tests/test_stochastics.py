"""Distribution specs, truncated-normal inverse CDF, correlated sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import norm

from cribdo.stochastics import (
    CorrelationSpec,
    DistributionSpec,
    lognormal,
    lognormal_log_params,
    normal,
    sample_batch,
    truncated_normal,
    truncated_normal_icdf,
)


class TestDistributionSpec:
    def test_normal_roundtrip(self):
        spec = normal(500.0, 100.0)
        assert spec.kind == "normal"
        assert spec.mean == 500.0
        assert spec.std_dev == 100.0

    def test_nonpositive_std_rejected(self):
        with pytest.raises(ValueError):
            normal(0.0, 0.0)
        with pytest.raises(ValueError):
            normal(0.0, -1.0)

    def test_lognormal_requires_positive_mean(self):
        with pytest.raises(ValueError):
            lognormal(-5.0, 0.5)

    def test_truncation_bounds_ordered(self):
        with pytest.raises(ValueError):
            truncated_normal(0.0, 1.0, 2.0, -2.0)

    def test_zero_mass_truncation_rejected(self):
        # the truncation window sits ~100 sigma from the mean
        with pytest.raises(ValueError):
            truncated_normal(0.0, 0.01, 1.0, 1.1)


class TestLognormalParams:
    def test_moment_matching_formulas(self):
        mean, std = 5.0, 0.5
        mu, sigma = lognormal_log_params(mean, std)
        assert mu == pytest.approx(np.log(mean**2 / np.sqrt(mean**2 + std**2)))
        assert sigma == pytest.approx(np.sqrt(np.log(1.0 + std**2 / mean**2)))

    def test_sample_moments_match(self):
        spec = lognormal(5.0, 0.5)
        batch = sample_batch((spec,), CorrelationSpec.identity(1), 400_000, seed=1)
        vals = batch.draws[:, 0]
        assert np.mean(vals) == pytest.approx(5.0, abs=0.01)
        assert np.std(vals) == pytest.approx(0.5, abs=0.01)
        assert np.all(vals > 0)


class TestTruncatedNormalIcdf:
    def test_symmetric_median_is_mean(self):
        assert truncated_normal_icdf(0.5, 0.0, 1.0, -4.0, 4.0) == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric_median_against_quadrature_oracle(self):
        # oracle: root-find on the truncated CDF built by adaptive quadrature
        mean, std, lo, hi = 0.0, 0.1, -0.4, 0.2
        mass = quad(lambda x: norm.pdf(x, mean, std), lo, hi)[0]

        def trunc_cdf(x):
            return quad(lambda u: norm.pdf(u, mean, std), lo, x)[0] / mass

        oracle = brentq(lambda x: trunc_cdf(x) - 0.5, lo + 1e-12, hi - 1e-12, xtol=1e-12)
        value = truncated_normal_icdf(0.5, mean, std, lo, hi)
        assert lo < value < hi
        assert value < 0.0  # more mass removed above the mean than below
        assert value == pytest.approx(oracle, abs=1e-9)

    def test_bounds_attained_in_the_limit(self):
        assert truncated_normal_icdf(1e-15, 0.0, 1.0, -2.0, 2.0) == pytest.approx(-2.0, abs=1e-6)
        assert truncated_normal_icdf(1 - 1e-15, 0.0, 1.0, -2.0, 2.0) == pytest.approx(2.0, abs=1e-6)

    @given(st.floats(0.001, 0.999), st.floats(0.002, 0.999))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_probability(self, u1, u2):
        lo, hi = -1.0, 0.5
        v1 = truncated_normal_icdf(u1, 0.0, 1.0, lo, hi)
        v2 = truncated_normal_icdf(u2, 0.0, 1.0, lo, hi)
        if u1 < u2:
            assert v1 <= v2
        elif u2 < u1:
            assert v2 <= v1


class TestCorrelationSpec:
    def test_identity(self):
        spec = CorrelationSpec.identity(3)
        assert np.array_equal(spec.matrix, np.eye(3))

    def test_non_psd_rejected(self):
        bad = np.array([[1.0, 0.99], [0.99, -1.0]])
        with pytest.raises(ValueError):
            CorrelationSpec(bad)

    def test_off_unit_diagonal_rejected(self):
        with pytest.raises(ValueError):
            CorrelationSpec(np.array([[2.0, 0.0], [0.0, 1.0]]))

    def test_sqrt_factor_reproduces_matrix(self):
        mat = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
        spec = CorrelationSpec(mat)
        f = spec.sqrt_factor()
        assert np.allclose(f @ f.T, mat, atol=1e-12)


class TestSampleBatch:
    SPECS = (normal(500.0, 100.0), normal(2000.0, 400.0), lognormal(5.0, 0.5))
    CORR = CorrelationSpec(np.array([
        [1.0, 0.5, 0.0],
        [0.5, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ]))

    def test_deterministic_given_seed_and_stream(self):
        a = sample_batch(self.SPECS, self.CORR, 500, seed=9, stream_id=2)
        b = sample_batch(self.SPECS, self.CORR, 500, seed=9, stream_id=2)
        assert np.array_equal(a.draws, b.draws)

    def test_streams_are_disjoint(self):
        a = sample_batch(self.SPECS, self.CORR, 500, seed=9, stream_id=0)
        b = sample_batch(self.SPECS, self.CORR, 500, seed=9, stream_id=1)
        assert not np.array_equal(a.draws, b.draws)

    def test_seed_changes_draws(self):
        a = sample_batch(self.SPECS, self.CORR, 500, seed=0)
        b = sample_batch(self.SPECS, self.CORR, 500, seed=1)
        assert not np.array_equal(a.draws, b.draws)

    def test_prefix_stability(self):
        # a longer batch starts with the same draws (per-component streams)
        a = sample_batch(self.SPECS, self.CORR, 200, seed=4)
        b = sample_batch(self.SPECS, self.CORR, 400, seed=4)
        assert np.array_equal(a.draws, b.draws[:200])

    def test_correlation_reproduced(self):
        batch = sample_batch(self.SPECS, self.CORR, 200_000, seed=5)
        r = np.corrcoef(batch.draws[:, 0], batch.draws[:, 1])[0, 1]
        assert r == pytest.approx(0.5, abs=0.01)

    def test_marginal_moments(self):
        batch = sample_batch(self.SPECS, self.CORR, 200_000, seed=6)
        for j, spec in enumerate(self.SPECS):
            assert np.mean(batch.draws[:, j]) == pytest.approx(spec.mean, rel=0.01)
            assert np.std(batch.draws[:, j]) == pytest.approx(spec.std_dev, rel=0.02)

    def test_truncation_respected(self):
        specs = (truncated_normal(0.0, 0.1, -0.4, 0.2),)
        batch = sample_batch(specs, CorrelationSpec.identity(1), 50_000, seed=7)
        assert batch.draws.min() >= -0.4
        assert batch.draws.max() <= 0.2

    def test_draws_write_protected(self):
        batch = sample_batch(self.SPECS, self.CORR, 100, seed=8)
        with pytest.raises(ValueError):
            batch.draws[0, 0] = 0.0

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            sample_batch(self.SPECS, self.CORR, 0, seed=0)
