"""Cross-sectional fragility signals.

Daily statistics are computed across stocks within each trading day
(population moments, weak-inequality tail fractions, trading-intensity
averages) and then averaged within each calendar month to form the 10
monthly predictors.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .panel import DailyPanel, DayCrossSection, MonthPartition

FEATURE_NAMES = [
    "n_stocks",
    "xs_std",
    "xs_skew",
    "xs_kurt",
    "mean_abs_ret",
    "frac_dn",
    "frac_up",
    "mean_log_vol",
    "mean_dollar_vol",
    "mean_turnover",
]


@dataclass(frozen=True)
class TailThreshold:
    """Absolute daily return beyond which a stock counts as an extreme mover."""

    tau: float = 0.05

    def __post_init__(self):
        if not self.tau > 0:
            raise DataError(f"tail threshold tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class DailyCrossSectionStats:
    """One day's cross-sectional statistics.

    ``degenerate`` marks a zero-dispersion day: skew and kurtosis are
    reported as 0 and excluded from monthly averages. Intensity fields are
    NaN when no row carried the needed volume data that day.
    """

    date: dt.date
    n_stocks: int
    xs_mean: float
    xs_std: float
    xs_skew: float
    xs_kurt: float
    mean_abs_ret: float
    frac_dn: float
    frac_up: float
    mean_log_vol: float
    mean_dollar_vol: float
    mean_turnover: float
    degenerate: bool


@dataclass(frozen=True)
class FeatureMatrix:
    """Monthly predictor matrix: one row per month, columns FEATURE_NAMES."""

    months: list[str]
    values: np.ndarray
    feature_names: tuple[str, ...] = tuple(FEATURE_NAMES)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def row(self, month: str) -> np.ndarray:
        return self.values[self.months.index(month)]


def cross_section_stats(day: DayCrossSection, date: dt.date, tau: TailThreshold) -> DailyCrossSectionStats:
    """Compute one day's cross-sectional statistics.

    Moments divide by the stock count (population convention); tail
    fractions use weak inequalities (ret <= -tau, ret >= +tau). Intensity
    means are taken over rows whose volume fields are present, and turnover
    additionally requires shares outstanding > 0.
    """
    r = day.ret
    n = r.shape[0]
    if n == 0:
        raise DataError(f"{date.isoformat()}: empty cross section")

    mean = float(np.mean(r))
    dev = r - mean
    var = float(np.mean(dev * dev))
    std = math.sqrt(var)
    degenerate = std == 0.0
    if degenerate:
        skew = 0.0
        kurt = 0.0
    else:
        # explicit products, not pow(): keeps the statistics exactly
        # equivariant under power-of-two rescaling of returns
        dev2 = dev * dev
        skew = float(np.mean(dev2 * dev)) / (var * std)
        kurt = float(np.mean(dev2 * dev2)) / (var * var)

    frac_dn = float(np.mean(r <= -tau.tau))
    frac_up = float(np.mean(r >= tau.tau))

    vol_ok = np.isfinite(day.vol)
    mean_log_vol = float(np.mean(np.log1p(day.vol[vol_ok]))) if vol_ok.any() else math.nan
    mean_dollar_vol = (
        float(np.mean(np.abs(day.prc[vol_ok]) * day.vol[vol_ok])) if vol_ok.any() else math.nan
    )
    turn_ok = vol_ok & np.isfinite(day.shrout) & (day.shrout > 0)
    mean_turnover = (
        float(np.mean(day.vol[turn_ok] / day.shrout[turn_ok])) if turn_ok.any() else math.nan
    )

    return DailyCrossSectionStats(
        date=date,
        n_stocks=n,
        xs_mean=mean,
        xs_std=std,
        xs_skew=skew,
        xs_kurt=kurt,
        mean_abs_ret=float(np.mean(np.abs(r))),
        frac_dn=frac_dn,
        frac_up=frac_up,
        mean_log_vol=mean_log_vol,
        mean_dollar_vol=mean_dollar_vol,
        mean_turnover=mean_turnover,
        degenerate=degenerate,
    )


def compute_daily_stats(panel: DailyPanel, tau: TailThreshold) -> list[DailyCrossSectionStats]:
    """Daily statistics for every date in the panel, in calendar order."""
    return [cross_section_stats(panel.days[d], d, tau) for d in panel.dates]


def aggregate_monthly(
    daily_stats: list[DailyCrossSectionStats], partition: MonthPartition
) -> FeatureMatrix:
    """Average daily statistics within each month of the partition.

    Skew/kurtosis values from degenerate days, and NaN intensity values from
    days without volume data, are excluded from their feature's average. A
    month whose every day is excluded for some feature is an error.
    """
    by_date = {s.date: s for s in daily_stats}
    for month in partition.months:
        for day in partition.days[month]:
            if day not in by_date:
                raise DataError(f"no daily statistics for {day.isoformat()} in month {month}")

    rows = np.empty((len(partition.months), len(FEATURE_NAMES)))
    for i, month in enumerate(partition.months):
        stats = [by_date[d] for d in partition.days[month]]
        rows[i, 0] = _mean([float(s.n_stocks) for s in stats], "n_stocks", month)
        rows[i, 1] = _mean([s.xs_std for s in stats], "xs_std", month)
        rows[i, 2] = _mean([s.xs_skew for s in stats if not s.degenerate], "xs_skew", month)
        rows[i, 3] = _mean([s.xs_kurt for s in stats if not s.degenerate], "xs_kurt", month)
        rows[i, 4] = _mean([s.mean_abs_ret for s in stats], "mean_abs_ret", month)
        rows[i, 5] = _mean([s.frac_dn for s in stats], "frac_dn", month)
        rows[i, 6] = _mean([s.frac_up for s in stats], "frac_up", month)
        rows[i, 7] = _mean([s.mean_log_vol for s in stats], "mean_log_vol", month)
        rows[i, 8] = _mean([s.mean_dollar_vol for s in stats], "mean_dollar_vol", month)
        rows[i, 9] = _mean([s.mean_turnover for s in stats], "mean_turnover", month)
    return FeatureMatrix(months=list(partition.months), values=rows)


def _mean(values: list[float], feature: str, month: str) -> float:
    kept = [v for v in values if not math.isnan(v)]
    if not kept:
        raise DataError(f"feature '{feature}' has no usable days in month {month}")
    return float(np.mean(np.array(kept)))
