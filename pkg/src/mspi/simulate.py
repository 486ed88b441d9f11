"""Seeded regime-switching market simulator.

Generates a daily stock panel, a market index series, and per-month
ground-truth regimes so the whole pipeline can be exercised without
proprietary data. The monthly regime follows a two-state Markov chain
(calm/stress) that switches at month boundaries only. Daily stock returns
are a market factor plus idiosyncratic noise with regime-dependent
dispersion, plus a regime-dependent chance of a -8% jump per stock-day.

All randomness comes from a single PCG64 generator seeded from the config,
so identical configs produce bit-identical output on any platform.
"""

from __future__ import annotations

import calendar
import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .panel import DailyPanel, DayCrossSection, MarketSeries

JUMP_RETURN = -0.08


@dataclass(frozen=True)
class RegimeParams:
    """Per-day dynamics within one regime."""

    mkt_drift: float
    mkt_vol: float
    dispersion: float
    tail_prob: float
    volume_scale: float

    def validate(self, prefix: str):
        if not self.mkt_vol > 0:
            raise ConfigError(f"{prefix}.mkt_vol must be > 0, got {self.mkt_vol}")
        if not self.dispersion > 0:
            raise ConfigError(f"{prefix}.dispersion must be > 0, got {self.dispersion}")
        if not 0 <= self.tail_prob <= 1:
            raise ConfigError(f"{prefix}.tail_prob must be in [0,1], got {self.tail_prob}")
        if not self.volume_scale > 0:
            raise ConfigError(f"{prefix}.volume_scale must be > 0, got {self.volume_scale}")


CALM_DEFAULT = RegimeParams(
    mkt_drift=0.0005, mkt_vol=0.0075, dispersion=0.015, tail_prob=0.003, volume_scale=1.0
)
STRESS_DEFAULT = RegimeParams(
    mkt_drift=-0.003, mkt_vol=0.022, dispersion=0.035, tail_prob=0.05, volume_scale=1.8
)


@dataclass(frozen=True)
class SimConfig:
    """Simulation size, regime dynamics, transition probabilities, and seed."""

    n_stocks: int = 500
    n_years: int = 40
    trading_days_per_year: int = 252
    calm: RegimeParams = field(default_factory=lambda: CALM_DEFAULT)
    stress: RegimeParams = field(default_factory=lambda: STRESS_DEFAULT)
    p_calm_to_stress: float = 0.028
    p_stress_to_calm: float = 0.25
    start_year: int = 1980
    seed: int = 7

    def validate(self):
        if self.n_stocks < 2:
            raise ConfigError(f"n_stocks must be >= 2, got {self.n_stocks}")
        if self.n_years < 1:
            raise ConfigError(f"n_years must be >= 1, got {self.n_years}")
        if self.trading_days_per_year < 12:
            raise ConfigError(
                f"trading_days_per_year must be >= 12, got {self.trading_days_per_year}"
            )
        for name, p in (
            ("p_calm_to_stress", self.p_calm_to_stress),
            ("p_stress_to_calm", self.p_stress_to_calm),
        ):
            if not 0 <= p <= 1:
                raise ConfigError(f"{name} must be in [0,1], got {p}")
        self.calm.validate("calm")
        self.stress.validate("stress")


@dataclass(frozen=True)
class SimOutput:
    """Simulated panel, market series, and per-month ground-truth regime."""

    panel: DailyPanel
    market: MarketSeries
    true_regime: dict[str, bool]


def _trading_days(year: int, month: int, per_month: int) -> list[dt.date]:
    """First `per_month` weekdays of the calendar month."""
    days = [
        dt.date(year, month, d)
        for d in range(1, calendar.monthrange(year, month)[1] + 1)
        if dt.date(year, month, d).weekday() < 5
    ]
    return days[:per_month]


def simulate(config: SimConfig) -> SimOutput:
    """Run the simulation described in the module docstring."""
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.n_stocks
    per_month = config.trading_days_per_year // 12

    # Static per-stock attributes. Prices are floored at $1 later so the
    # default eligibility filter never drops a synthetic row.
    prices = np.exp(rng.normal(np.log(30.0), 0.8, size=n))
    shrout = np.round(np.exp(rng.normal(np.log(2e7), 1.0, size=n)))
    base_volume = np.exp(rng.normal(np.log(1e5), 0.7, size=n))

    dates: list[dt.date] = []
    days: dict[dt.date, DayCrossSection] = {}
    mkt: list[float] = []
    true_regime: dict[str, bool] = {}
    share_ok = np.ones(n, dtype=bool)
    exch_ok = np.ones(n, dtype=bool)

    stress = False
    for m in range(config.n_years * 12):
        year = config.start_year + m // 12
        month = m % 12 + 1
        if m > 0:
            u = rng.random()
            stress = (u < config.p_calm_to_stress) if not stress else (u >= config.p_stress_to_calm)
        true_regime[f"{year:04d}-{month:02d}"] = stress
        params = config.stress if stress else config.calm

        for day in _trading_days(year, month, per_month):
            mkt_ret = params.mkt_drift + params.mkt_vol * rng.standard_normal()
            idio = params.dispersion * rng.standard_normal(n)
            jumps = rng.random(n) < params.tail_prob
            ret = mkt_ret + idio + np.where(jumps, JUMP_RETURN, 0.0)
            prices = np.maximum(1.0, prices * (1.0 + ret))
            volume = np.round(
                base_volume * params.volume_scale * np.exp(0.5 * rng.standard_normal(n))
            )
            dates.append(day)
            days[day] = DayCrossSection(
                ret=ret, prc=prices.copy(), vol=volume, shrout=shrout,
                share_ok=share_ok, exch_ok=exch_ok,
            )
            mkt.append(mkt_ret)

    panel = DailyPanel(dates=dates, days=days)
    market = MarketSeries(dates=list(dates), mkt_ret=np.array(mkt))
    return SimOutput(panel=panel, market=market, true_regime=true_regime)


def stationary_stress_share(config: SimConfig) -> float:
    """Long-run stress frequency of the regime chain."""
    denom = config.p_calm_to_stress + config.p_stress_to_calm
    if denom == 0:
        return 0.0
    return config.p_calm_to_stress / denom


def security_ids(n_stocks: int) -> list[str]:
    """Deterministic zero-padded ids whose lexicographic order matches index order."""
    width = max(4, len(str(n_stocks - 1)))
    return [f"S{i:0{width}d}" for i in range(n_stocks)]
