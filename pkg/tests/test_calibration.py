import numpy as np
import pytest

from mspi.learners import CalibrationMap, calibrate, calibrate_many, fit_platt


class TestFitPlatt:
    def test_identity_when_scores_are_true_probabilities(self):
        # 1e4 Bernoulli draws whose success probabilities equal the scores
        rng = np.random.default_rng(17)
        scores = rng.beta(3.0, 3.0, size=10_000)
        y = (rng.random(10_000) < scores).astype(float)
        cmap = fit_platt(scores, y)
        cal = calibrate_many(cmap, scores)
        assert float(np.mean(np.abs(cal - scores))) < 0.02

    def test_constant_scores_yield_event_rate(self):
        y = np.array([1.0] * 3 + [0.0] * 7)
        cmap = fit_platt(np.full(10, 0.42), y)
        # Laplace-smoothed event rate (3+1)/(10+2)
        assert calibrate(cmap, 0.42) == pytest.approx(4 / 12, abs=1e-9)

    def test_positive_association_gives_positive_slope(self):
        rng = np.random.default_rng(18)
        scores = rng.normal(size=500)
        y = (rng.random(500) < 1 / (1 + np.exp(-2 * scores))).astype(float)
        cmap = fit_platt(scores, y)
        assert cmap.a > 0.0

    def test_single_class_segment_identity_fallback(self):
        cmap = fit_platt(np.linspace(0, 1, 8), np.zeros(8))
        assert cmap.identity and cmap.warning is not None
        assert calibrate(cmap, 0.3) == pytest.approx(0.3)
        assert calibrate(cmap, 1.5) == pytest.approx(1.0 - 1e-12)

    def test_monotone_when_slope_positive(self):
        rng = np.random.default_rng(19)
        scores = rng.normal(size=300)
        y = (rng.random(300) < 1 / (1 + np.exp(-scores))).astype(float)
        cmap = fit_platt(scores, y)
        grid = np.linspace(-4, 4, 200)
        out = calibrate_many(cmap, grid)
        assert np.all(np.diff(out) > 0.0)

    def test_separable_segment_stays_finite(self):
        scores = np.concatenate([np.linspace(-2, -1, 10), np.linspace(1, 2, 10)])
        y = np.array([0.0] * 10 + [1.0] * 10)
        cmap = fit_platt(scores, y)
        assert np.isfinite(cmap.a) and np.isfinite(cmap.b)
        out = calibrate_many(cmap, scores)
        assert np.all((out > 0.0) & (out < 1.0))

    def test_output_clamped(self):
        cmap = CalibrationMap(a=100.0, b=0.0)
        assert calibrate(cmap, 10.0) == 1.0 - 1e-12
        assert calibrate(cmap, -10.0) == 1e-12
