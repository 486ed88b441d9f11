import numpy as np
import pytest

from mspi.errors import ConfigError
from mspi.features import TailThreshold, compute_daily_stats
from mspi.simulate import RegimeParams, SimConfig, simulate, stationary_stress_share


def small(**kw):
    base = dict(n_stocks=10, n_years=4, seed=7)
    base.update(kw)
    return SimConfig(**base)


class TestSimulate:
    def test_identical_seed_identical_output(self):
        a = simulate(small())
        b = simulate(small())
        assert a.panel.dates == b.panel.dates
        assert np.array_equal(a.market.mkt_ret, b.market.mkt_ret)
        for day in a.panel.dates:
            assert np.array_equal(a.panel.days[day].ret, b.panel.days[day].ret)
            assert np.array_equal(a.panel.days[day].prc, b.panel.days[day].prc)
            assert np.array_equal(a.panel.days[day].vol, b.panel.days[day].vol)
        assert a.true_regime == b.true_regime

    def test_different_seed_differs(self):
        a = simulate(small(seed=1))
        b = simulate(small(seed=2))
        assert not np.array_equal(a.market.mkt_ret, b.market.mkt_ret)

    def test_degenerate_chain_stays_calm(self):
        cfg = small(p_calm_to_stress=0.0, p_stress_to_calm=0.0)
        out = simulate(cfg)
        assert not any(out.true_regime.values())

    def test_stress_months_have_higher_dispersion(self):
        cfg = small(n_years=30, seed=3)
        out = simulate(cfg)
        stats = compute_daily_stats(out.panel, TailThreshold())
        by_month: dict[str, list[float]] = {}
        for s in stats:
            by_month.setdefault(f"{s.date.year:04d}-{s.date.month:02d}", []).append(s.xs_std)
        stress_vals = [v for m, vs in by_month.items() if out.true_regime[m] for v in vs]
        calm_vals = [v for m, vs in by_month.items() if not out.true_regime[m] for v in vs]
        assert np.mean(stress_vals) > np.mean(calm_vals)

    def test_long_run_regime_frequency(self):
        cfg = SimConfig(n_stocks=3, n_years=200, seed=21)
        out = simulate(cfg)
        freq = np.mean([v for v in out.true_regime.values()])
        pi = stationary_stress_share(cfg)
        # standard error for a two-state chain with autocorrelation
        # rho = 1 - p_cs - p_sc
        rho = 1.0 - cfg.p_calm_to_stress - cfg.p_stress_to_calm
        n = len(out.true_regime)
        se = np.sqrt(pi * (1 - pi) / n * (1 + rho) / (1 - rho))
        assert abs(freq - pi) < 3 * se

    def test_outputs_finite_and_nonnegative(self):
        out = simulate(small(seed=9))
        for day in out.panel.dates:
            cs = out.panel.days[day]
            assert np.all(np.isfinite(cs.ret))
            assert np.all(cs.vol >= 0)
            assert np.all(cs.shrout >= 0)
            assert np.all(np.abs(cs.prc) >= 1.0)  # floored at the filter minimum

    def test_calendar_shared_with_market(self):
        out = simulate(small())
        assert out.panel.dates == out.market.dates
        months = {f"{d.year:04d}-{d.month:02d}" for d in out.panel.dates}
        assert months == set(out.true_regime)

    def test_invalid_config_names_field(self):
        with pytest.raises(ConfigError, match="n_stocks"):
            SimConfig(n_stocks=1).validate()
        with pytest.raises(ConfigError, match="p_calm_to_stress"):
            SimConfig(p_calm_to_stress=1.5).validate()
        with pytest.raises(ConfigError, match="stress.dispersion"):
            SimConfig(
                stress=RegimeParams(mkt_drift=0, mkt_vol=0.01, dispersion=-1,
                                    tail_prob=0.1, volume_scale=1)
            ).validate()
