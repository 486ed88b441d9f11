import numpy as np
import pytest

from mspi.backtest import ForecastSeries
from mspi.econometrics import (
    crash_regression,
    hac_covariance,
    local_projections,
    lp_outcome_series,
    mspi_innovations,
    ols_hac,
    predictive_vol_regression,
)
from mspi.errors import DataError

from .oracles import white_covariance


def toy_forecasts(n=120, seed=0, link=0.0):
    """Forecast series with controllable link from probability to next vol."""
    rng = np.random.default_rng(seed)
    prob = np.clip(rng.beta(2, 8, n), 0.01, 0.99)
    sigma = rng.lognormal(-2.0, 0.3, n)
    next_vol = np.abs(0.1 + link * prob + 0.02 * rng.standard_normal(n))
    next_ret = rng.normal(0.005, 0.04, n)
    y_next = (rng.random(n) < prob).astype(float)
    return ForecastSeries(
        months=[f"{2000 + i // 12:04d}-{i % 12 + 1:02d}" for i in range(n)],
        models=("l1",),
        raw={"l1": np.log(prob / (1 - prob))},
        prob={"l1": prob},
        y_next=y_next,
        next_vol=next_vol,
        next_ret=next_ret,
        r_mkt=rng.normal(0.004, 0.04, n),
        sigma_mkt=sigma,
        selected={},
        seed=seed,
    )


class TestOlsHac:
    def test_exact_fit(self):
        x = np.arange(1.0, 21.0)
        X = np.column_stack([np.ones(20), x])
        res = ols_hac(2.0 * x, X, hac_lag=3, names=("intercept", "x"))
        assert res.coefficient("x") == pytest.approx(2.0, abs=1e-12)
        assert np.max(np.abs(res.residuals)) < 1e-10
        assert res.std_error("x") == pytest.approx(0.0, abs=1e-10)
        assert res.r2 == pytest.approx(1.0)

    def test_lag_zero_matches_white(self):
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(50), rng.standard_normal((50, 2))])
        y = X @ np.array([0.5, 1.0, -2.0]) + rng.standard_normal(50) * (1 + 0.5 * np.abs(X[:, 1]))
        res = ols_hac(y, X, hac_lag=0)
        expected = white_covariance(X, res.residuals)
        got = hac_covariance(X, res.residuals, 0)
        assert np.max(np.abs(got - expected)) < 1e-12
        assert np.max(np.abs(res.se - np.sqrt(np.diag(expected)))) < 1e-12

    def test_column_permutation_symmetry(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(60), rng.standard_normal((60, 3))])
        y = rng.standard_normal(60)
        res = ols_hac(y, X, hac_lag=2)
        perm = [0, 2, 3, 1]
        res_p = ols_hac(y, X[:, perm], hac_lag=2)
        assert np.max(np.abs(res_p.coef - res.coef[perm])) < 1e-10

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(3)
        X = np.column_stack([np.ones(80), rng.standard_normal((80, 4))])
        y = rng.standard_normal(80)
        res = ols_hac(y, X, hac_lag=4)
        assert np.max(np.abs(X.T @ res.residuals)) < 1e-8

    def test_rank_deficient_names_column(self):
        x = np.arange(1.0, 31.0)
        X = np.column_stack([np.ones(30), x, 2 * x])
        with pytest.raises(DataError, match="'double_x'"):
            ols_hac(np.ones(30), X, 0, names=("intercept", "x", "double_x"))

    def test_hac_psd(self):
        rng = np.random.default_rng(4)
        for lag in (0, 3, 6, 12):
            X = np.column_stack([np.ones(90), rng.standard_normal((90, 3))])
            e = rng.standard_normal(90)
            cov = hac_covariance(X, e, lag)
            eigs = np.linalg.eigvalsh(cov)
            assert eigs.min() >= -1e-10
            assert np.max(np.abs(cov - cov.T)) < 1e-14


class TestPredictiveVolRegression:
    def test_identity_regressor(self):
        fs = toy_forecasts(seed=5)
        fs.next_vol[:] = fs.prob["l1"]  # index equals next-month volatility
        res = predictive_vol_regression(fs, include_controls=False)
        assert res.gamma == pytest.approx(1.0, abs=1e-10)
        assert res.regression.r2 == pytest.approx(1.0)

    def test_noise_index_insignificant(self):
        hits = 0
        for seed in range(100):
            fs = toy_forecasts(n=150, seed=seed, link=0.0)
            res = predictive_vol_regression(fs, include_controls=True)
            hits += abs(res.regression.t_stat("mspi")) < 2.0
        assert hits >= 90

    def test_linked_index_positive_gamma(self):
        fs = toy_forecasts(n=200, seed=6, link=0.3)
        res = predictive_vol_regression(fs)
        assert res.gamma > 0.0
        assert res.delta_r2 > 0.0


class TestCrashRegression:
    def test_all_zero_indicator_skips_logistic(self):
        fs = toy_forecasts(seed=7)
        res = crash_regression(fs, cutoff=-10.0)
        assert res.logistic is None and res.warning is not None
        assert res.crash_rate == 0.0

    def test_two_level_regressor_matches_group_rates(self):
        fs = toy_forecasts(n=200, seed=8)
        fs.prob["l1"][:] = np.where(np.arange(200) % 2 == 0, 0.2, 0.6)
        fs.next_ret[:] = np.where(
            (np.arange(200) % 2 == 0) & (np.arange(200) < 100), -0.06, 0.01
        )
        res = crash_regression(fs, cutoff=-0.05, include_controls=False)
        # saturated regression: fitted values equal the group crash rates
        crash = (fs.next_ret <= -0.05).astype(float)
        for level in (0.2, 0.6):
            fitted = res.linear.coef[0] + res.linear.coef[1] * level
            group_rate = float(np.mean(crash[fs.prob["l1"] == level]))
            assert fitted == pytest.approx(group_rate, abs=1e-10)

    def test_synthetic_backtest_positive_coefficient(self, small_forecasts):
        res = crash_regression(small_forecasts, cutoff=-0.05)
        assert res.linear.coefficient("mspi") > -1e-9 or res.crash_rate < 0.02


class TestInnovations:
    def test_constant_index_zero_innovations(self):
        fs = toy_forecasts(seed=9)
        fs.prob["l1"][:] = 0.25
        innov = mspi_innovations(fs, include_controls=True)
        assert np.max(np.abs(innov.innovations)) < 1e-12

    def test_white_noise_index_keeps_variance(self):
        fs = toy_forecasts(n=500, seed=10)
        innov = mspi_innovations(fs, include_controls=True)
        ratio = np.std(innov.innovations) / np.std(fs.prob["l1"])
        assert abs(ratio - 1.0) < 0.10

    def test_orthogonality_to_lagged_index(self):
        fs = toy_forecasts(n=300, seed=11)
        innov = mspi_innovations(fs)
        lagged = fs.prob["l1"][:-1]
        corr = float(np.dot(innov.innovations - innov.innovations.mean(),
                            lagged - lagged.mean()))
        assert abs(corr) / len(lagged) < 1e-8

    def test_residuals_sum_to_zero(self):
        fs = toy_forecasts(n=200, seed=12)
        innov = mspi_innovations(fs)
        assert abs(float(np.sum(innov.innovations))) < 1e-8

    def test_control_rescaling_invariance(self):
        fs = toy_forecasts(n=200, seed=13)
        innov1 = mspi_innovations(fs)
        fs2 = toy_forecasts(n=200, seed=13)
        fs2.r_mkt[:] = 100.0 * fs2.r_mkt + 0.5
        fs2.sigma_mkt[:] = 3.0 * fs2.sigma_mkt - 0.2
        innov2 = mspi_innovations(fs2)
        assert np.max(np.abs(innov1.innovations - innov2.innovations)) < 1e-8


class TestLocalProjections:
    def test_identity_projection(self):
        rng = np.random.default_rng(14)
        u = rng.standard_normal(100)
        res = local_projections(u, u.copy(), None, max_horizon=0)
        assert res.b[0] == pytest.approx(1.0, abs=1e-10)
        assert res.se[0] == pytest.approx(0.0, abs=1e-10)

    def test_lagged_dependence_spike_at_one(self):
        rng = np.random.default_rng(15)
        u = rng.standard_normal(500)
        y = np.concatenate([[0.0], u[:-1]])  # y_t = u_{t-1}
        res = local_projections(u, y, None, max_horizon=3)
        assert res.b[1] == pytest.approx(1.0, abs=1e-8)
        assert abs(res.b[0]) < 0.15 and abs(res.b[2]) < 0.15

    def test_null_coverage(self):
        inside = 0
        total = 0
        for seed in range(100):
            rng = np.random.default_rng(300 + seed)
            u = rng.standard_normal(150)
            y = rng.standard_normal(150)
            res = local_projections(u, y, None, max_horizon=4)
            inside += int(np.sum(np.abs(res.b) < 2.0 * res.se))
            total += len(res.horizons)
        assert inside / total >= 0.90

    def test_horizon_counts(self):
        rng = np.random.default_rng(16)
        u = rng.standard_normal(60)
        y = rng.standard_normal(60)
        res = local_projections(u, y, None, max_horizon=5)
        assert res.horizons == list(range(6))
        assert res.n_obs.tolist() == [60 - h for h in range(6)]

    def test_h0_equals_direct_ols(self):
        rng = np.random.default_rng(17)
        u = rng.standard_normal(80)
        y = 0.4 * u + rng.standard_normal(80)
        res = local_projections(u, y, None, max_horizon=0, hac_lag_offset=1)
        direct = ols_hac(y, np.column_stack([np.ones(80), u]), hac_lag=1)
        assert res.b[0] == direct.coef[1]
        assert res.se[0] == direct.se[1]

    def test_sample_exhausting_horizon_omitted(self):
        u = np.arange(6.0)
        y = np.arange(6.0)
        res = local_projections(u, y, None, max_horizon=5)
        assert max(res.horizons) < 5

    def test_outcome_series_selector(self, small_forecasts):
        vol = lp_outcome_series(small_forecasts, "sigma_mkt")
        assert np.array_equal(vol, small_forecasts.sigma_mkt)
        crash = lp_outcome_series(small_forecasts, "crash", crash_cutoff=-0.05)
        assert set(np.unique(crash)) <= {0.0, 1.0}
        with pytest.raises(DataError):
            lp_outcome_series(small_forecasts, "zap")
