"""Proportion estimate invariants: interval choice, bounds, degeneracy."""

import math

import pytest

from mirrorslab.stats import CrossingEstimate, Z95, normal_interval, wilson_interval


class TestCrossingEstimate:
    def test_stderr_formula(self):
        est = CrossingEstimate.from_counts(600, 1000)
        assert est.stderr == pytest.approx(math.sqrt(0.6 * 0.4 / 1000))

    def test_normal_interval_for_bulk_proportions(self):
        est = CrossingEstimate.from_counts(50_000, 100_000)
        low, high = normal_interval(50_000, 100_000)
        assert (est.ci_low, est.ci_high) == (low, high)

    def test_wilson_for_rare_events(self):
        # samples * min(p, 1-p) = 20 < 30 triggers the Wilson interval
        est = CrossingEstimate.from_counts(20, 100_000)
        low, high = wilson_interval(20, 100_000)
        assert (est.ci_low, est.ci_high) == (low, high)
        assert low > 0.0

    def test_interval_brackets_estimate(self):
        for crossed, samples in ((0, 10), (10, 10), (1, 3), (500, 1000), (1, 10**6)):
            est = CrossingEstimate.from_counts(crossed, samples)
            assert 0.0 <= est.ci_low <= est.p_hat <= est.ci_high <= 1.0

    def test_degenerate_flagging(self):
        zero = CrossingEstimate.from_counts(0, 100)
        full = CrossingEstimate.from_counts(100, 100)
        assert zero.degenerate and full.degenerate
        assert math.isnan(zero.stderr) and math.isnan(full.stderr)
        assert zero.ci_high > 0.0 and full.ci_low < 1.0

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            CrossingEstimate.from_counts(5, 0)
        with pytest.raises(ValueError):
            CrossingEstimate.from_counts(11, 10)

    def test_z95_is_two_sided_95(self):
        # Phi(z) - Phi(-z) = 0.95
        from math import erf, sqrt

        coverage = erf(Z95 / sqrt(2))
        assert coverage == pytest.approx(0.95, abs=1e-12)
