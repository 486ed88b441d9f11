"""Real-time stress labels.

Monthly market returns are compounded from daily index returns; realized
volatility is the within-month sample standard deviation annualized by
sqrt(252). A month is a stress month when the return breaches a fixed
downside cutoff or realized volatility reaches the expanding quantile of
all volatility observed through the previous month. Months without enough
quantile history are excluded from the modeling sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .panel import MarketSeries, MonthPartition

ANNUALIZATION_DEFAULT = math.sqrt(252.0)


@dataclass(frozen=True)
class StressConfig:
    """Stress-rule parameters: return cutoff, volatility quantile, warmup length."""

    return_cutoff: float = -0.05
    vol_quantile: float = 0.90
    min_history_months: int = 36
    annualization_factor: float = ANNUALIZATION_DEFAULT

    def __post_init__(self):
        if not self.return_cutoff < 0:
            raise ConfigError(f"return_cutoff must be < 0, got {self.return_cutoff}")
        if not 0 < self.vol_quantile < 1:
            raise ConfigError(f"vol_quantile must be in (0,1), got {self.vol_quantile}")
        if self.min_history_months < 2:
            raise ConfigError(f"min_history_months must be >= 2, got {self.min_history_months}")


@dataclass(frozen=True)
class MarketMonthly:
    """Per-month compounded market return and annualized realized volatility."""

    months: list[str]
    r_mkt: np.ndarray
    sigma_mkt: np.ndarray

    def index_of(self, month: str) -> int:
        return self.months.index(month)


@dataclass(frozen=True)
class LabelSeries:
    """Stress indicators for the labeled (post-warmup) months.

    Row t carries the stress state S_t, the quantile threshold q_prev used
    to label it, and the forecast target y_next = S_{t+1} (NaN on the final
    labeled month). r_mkt and sigma_mkt are repeated here for convenience.
    """

    months: list[str]
    r_mkt: np.ndarray
    sigma_mkt: np.ndarray
    q_prev: np.ndarray
    s: np.ndarray
    y_next: np.ndarray


def monthly_market_return(market: MarketSeries, partition: MonthPartition) -> dict[str, float]:
    """Compound daily index returns within each partition month."""
    by_date = market.by_date()
    out = {}
    for month in partition.months:
        rets = np.array([by_date[d] for d in partition.days[month]])
        out[month] = float(np.prod(1.0 + rets) - 1.0)
    return out


def realized_monthly_vol(
    market: MarketSeries,
    partition: MonthPartition,
    annualization: float = ANNUALIZATION_DEFAULT,
) -> dict[str, float]:
    """Within-month sample std (ddof=1) of daily returns, annualized."""
    by_date = market.by_date()
    out = {}
    for month in partition.months:
        rets = np.array([by_date[d] for d in partition.days[month]])
        if rets.shape[0] < 2:
            raise DataError(f"month {month} has a single trading day; volatility undefined")
        out[month] = float(np.std(rets, ddof=1) * annualization)
    return out


def build_market_monthly(
    market: MarketSeries,
    partition: MonthPartition,
    annualization: float = ANNUALIZATION_DEFAULT,
) -> MarketMonthly:
    rets = monthly_market_return(market, partition)
    vols = realized_monthly_vol(market, partition, annualization)
    months = list(partition.months)
    return MarketMonthly(
        months=months,
        r_mkt=np.array([rets[m] for m in months]),
        sigma_mkt=np.array([vols[m] for m in months]),
    )


def expanding_quantile(history: np.ndarray, alpha: float) -> float:
    """Linear-interpolation quantile of the history seen so far.

    Position (n-1)*alpha between order statistics, the common convention.
    """
    if history.shape[0] == 0:
        raise DataError("empty history for expanding quantile")
    return float(np.quantile(history, alpha, method="linear"))


def label_stress(monthly: MarketMonthly, config: StressConfig) -> LabelSeries:
    """Label stress months in real time.

    Month at index i is labeled once i >= min_history_months, using the
    quantile of sigma_mkt over indices [0, i) — all volatility through the
    previous month. S = 1 iff r_mkt <= return_cutoff or sigma_mkt >= that
    quantile. y_next is S shifted back one month.
    """
    warm = config.min_history_months
    n = len(monthly.months)
    if n <= warm:
        raise DataError(
            f"need more than {warm} months of history to label stress, got {n}"
        )
    months = monthly.months[warm:]
    r = monthly.r_mkt[warm:]
    sigma = monthly.sigma_mkt[warm:]
    q_prev = np.array(
        [expanding_quantile(monthly.sigma_mkt[:i], config.vol_quantile) for i in range(warm, n)]
    )
    s = ((r <= config.return_cutoff) | (sigma >= q_prev)).astype(np.int64)
    y_next = np.full(s.shape[0], np.nan)
    y_next[:-1] = s[1:]
    return LabelSeries(
        months=list(months), r_mkt=r.copy(), sigma_mkt=sigma.copy(),
        q_prev=q_prev, s=s, y_next=y_next,
    )
