"""Daily stock panel and market index ingestion.

CSV contracts (UTF-8, comma-delimited, ISO-8601 dates, decimal returns):

    panel:  date,security_id,ret,prc,vol,shrout,shrcd_ok,exchcd_ok
    market: date,mkt_ret

Lines starting with ``#`` are treated as comments (artifacts written by the
CLI carry a ``# config_hash=...`` first line).

Within each date the retained observations are sorted by ``security_id``
before being packed into arrays, so every downstream accumulation runs in a
fixed order and results are bit-reproducible regardless of input row order.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

PANEL_COLUMNS = ["date", "security_id", "ret", "prc", "vol", "shrout", "shrcd_ok", "exchcd_ok"]
MARKET_COLUMNS = ["date", "mkt_ret"]

_TRUE_TOKENS = {"1", "true", "t", "yes"}
_FALSE_TOKENS = {"0", "false", "f", "no"}


def month_key(day: dt.date) -> str:
    """Calendar year-month bucket of a date, e.g. '2008-09'."""
    return f"{day.year:04d}-{day.month:02d}"


@dataclass(frozen=True)
class EligibilityFilter:
    """Row filter applied at ingest: price floor plus share-class/exchange flags."""

    min_abs_price: float = 1.0
    require_share_class: bool = True
    require_exchange: bool = True

    def __post_init__(self):
        if self.min_abs_price < 0:
            raise DataError("min_abs_price must be >= 0")


@dataclass(frozen=True)
class DayCrossSection:
    """All retained observations for one trading day, sorted by security id.

    ``vol`` and ``shrout`` hold NaN where the source field was missing; such
    rows still contribute to return-based statistics.
    """

    ret: np.ndarray
    prc: np.ndarray
    vol: np.ndarray
    shrout: np.ndarray
    share_ok: np.ndarray
    exch_ok: np.ndarray

    @property
    def n_stocks(self) -> int:
        return self.ret.shape[0]


@dataclass(frozen=True)
class DailyPanel:
    """Filtered daily panel: per-date cross sections on a shared calendar."""

    dates: list[dt.date]
    days: dict[dt.date, DayCrossSection]

    def n_on(self, day: dt.date) -> int:
        return self.days[day].n_stocks

    @property
    def total_observations(self) -> int:
        return sum(d.n_stocks for d in self.days.values())


@dataclass(frozen=True)
class MarketSeries:
    """Daily value-weighted market index returns, strictly increasing dates."""

    dates: list[dt.date]
    mkt_ret: np.ndarray

    def by_date(self) -> dict[dt.date, float]:
        return dict(zip(self.dates, self.mkt_ret.tolist()))


@dataclass(frozen=True)
class MonthPartition:
    """Calendar year-month buckets of the panel's trading days."""

    months: list[str]
    days: dict[str, list[dt.date]]

    def day_count(self, month: str) -> int:
        return len(self.days[month])


@dataclass
class IngestSummary:
    """Row accounting for one panel load."""

    rows_read: int = 0
    rows_kept: int = 0
    dropped: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str):
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": dict(sorted(self.dropped.items())),
        }


def _parse_bool(token: str, line: int, column: str) -> bool:
    low = token.strip().lower()
    if low in _TRUE_TOKENS:
        return True
    if low in _FALSE_TOKENS:
        return False
    raise DataError(f"line {line}, column '{column}': cannot parse boolean from {token!r}")


def _parse_date(token: str, line: int, column: str) -> dt.date:
    try:
        return dt.date.fromisoformat(token.strip())
    except ValueError as exc:
        raise DataError(f"line {line}, column '{column}': {exc}") from None


def _parse_float(token: str, line: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(f"line {line}, column '{column}': cannot parse number from {token!r}") from None


def _open_rows(path: str, required: list[str]):
    """Yield (line_number, row dict) for a headered CSV, skipping comments."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or (row[0].startswith("#") and header is None):
                continue
            header = row
            break
        if header is None:
            raise DataError(f"{path}: empty file")
        index = {name.strip(): i for i, name in enumerate(header)}
        missing = [c for c in required if c not in index]
        if missing:
            raise DataError(f"{path}: header is missing columns {missing}")
        width = len(header)
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if len(row) != width:
                raise DataError(
                    f"line {reader.line_num}: expected {width} fields, found {len(row)}"
                )
            yield reader.line_num, {c: row[index[c]] for c in required}


def load_daily_panel(path: str, filt: EligibilityFilter) -> tuple[DailyPanel, IngestSummary]:
    """Load and filter the daily panel CSV.

    Rows are dropped (and counted per reason) when the return or price is
    missing/non-finite, |price| is below the filter floor, or a required
    eligibility flag is false. Missing volume/shares fields are kept as NaN.
    Malformed rows raise DataError naming the line and column.
    """
    summary = IngestSummary()
    by_date: dict[dt.date, list[tuple]] = {}
    for line, row in _open_rows(path, PANEL_COLUMNS):
        summary.rows_read += 1
        day = _parse_date(row["date"], line, "date")
        sec = row["security_id"].strip()
        if not sec:
            raise DataError(f"line {line}, column 'security_id': empty identifier")
        share_ok = _parse_bool(row["shrcd_ok"], line, "shrcd_ok")
        exch_ok = _parse_bool(row["exchcd_ok"], line, "exchcd_ok")

        ret_tok = row["ret"].strip()
        prc_tok = row["prc"].strip()
        ret = _parse_float(ret_tok, line, "ret") if ret_tok else math.nan
        prc = _parse_float(prc_tok, line, "prc") if prc_tok else math.nan

        vol_tok = row["vol"].strip()
        shrout_tok = row["shrout"].strip()
        vol = _parse_float(vol_tok, line, "vol") if vol_tok else math.nan
        shrout = _parse_float(shrout_tok, line, "shrout") if shrout_tok else math.nan
        if not math.isnan(vol) and vol < 0:
            raise DataError(f"line {line}, column 'vol': negative volume {vol}")
        if not math.isnan(shrout) and shrout < 0:
            raise DataError(f"line {line}, column 'shrout': negative shares outstanding {shrout}")

        if not math.isfinite(ret):
            summary.drop("missing_ret")
            continue
        if not math.isfinite(prc):
            summary.drop("missing_prc")
            continue
        if abs(prc) < filt.min_abs_price:
            summary.drop("price_below_min")
            continue
        if filt.require_share_class and not share_ok:
            summary.drop("share_class")
            continue
        if filt.require_exchange and not exch_ok:
            summary.drop("exchange")
            continue

        summary.rows_kept += 1
        by_date.setdefault(day, []).append((sec, ret, prc, vol, shrout, share_ok, exch_ok))

    if not by_date:
        raise DataError(f"{path}: empty panel after filtering")

    dates = sorted(by_date)
    days: dict[dt.date, DayCrossSection] = {}
    for day in dates:
        rows = by_date[day]
        rows.sort(key=lambda r: r[0])
        for (a, *_), (b, *_) in zip(rows, rows[1:]):
            if a == b:
                raise DataError(f"duplicate security_id {a!r} on {day.isoformat()}")
        days[day] = DayCrossSection(
            ret=np.array([r[1] for r in rows], dtype=float),
            prc=np.array([r[2] for r in rows], dtype=float),
            vol=np.array([r[3] for r in rows], dtype=float),
            shrout=np.array([r[4] for r in rows], dtype=float),
            share_ok=np.array([r[5] for r in rows], dtype=bool),
            exch_ok=np.array([r[6] for r in rows], dtype=bool),
        )
    return DailyPanel(dates=dates, days=days), summary


def refilter_panel(panel: DailyPanel, filt: EligibilityFilter) -> tuple[DailyPanel, int]:
    """Re-apply an eligibility filter to an in-memory panel.

    Returns the filtered panel and the number of rows dropped. Applying the
    filter a panel was built with drops nothing.
    """
    days: dict[dt.date, DayCrossSection] = {}
    dates: list[dt.date] = []
    dropped = 0
    for day in panel.dates:
        cs = panel.days[day]
        keep = np.isfinite(cs.ret) & np.isfinite(cs.prc) & (np.abs(cs.prc) >= filt.min_abs_price)
        if filt.require_share_class:
            keep &= cs.share_ok
        if filt.require_exchange:
            keep &= cs.exch_ok
        dropped += int(cs.n_stocks - keep.sum())
        if not keep.any():
            continue
        dates.append(day)
        days[day] = DayCrossSection(
            ret=cs.ret[keep], prc=cs.prc[keep], vol=cs.vol[keep],
            shrout=cs.shrout[keep], share_ok=cs.share_ok[keep], exch_ok=cs.exch_ok[keep],
        )
    if not dates:
        raise DataError("empty panel after filtering")
    return DailyPanel(dates=dates, days=days), dropped


def load_market_series(path: str) -> MarketSeries:
    """Load the daily market index series; rejects duplicates and non-finite returns."""
    rows: list[tuple[dt.date, float]] = []
    seen: set[dt.date] = set()
    for line, row in _open_rows(path, MARKET_COLUMNS):
        day = _parse_date(row["date"], line, "date")
        ret = _parse_float(row["mkt_ret"], line, "mkt_ret")
        if not math.isfinite(ret):
            raise DataError(f"line {line}, column 'mkt_ret': non-finite return {ret!r}")
        if day in seen:
            raise DataError(f"line {line}: duplicate date {day.isoformat()}")
        seen.add(day)
        rows.append((day, ret))
    if not rows:
        raise DataError(f"{path}: empty series")
    rows.sort(key=lambda r: r[0])
    return MarketSeries(dates=[r[0] for r in rows], mkt_ret=np.array([r[1] for r in rows]))


def partition_months(panel: DailyPanel, market: MarketSeries) -> MonthPartition:
    """Bucket the panel's trading days into calendar months.

    The market calendar may be a superset of the panel calendar, but every
    panel date must appear in it.
    """
    market_dates = set(market.dates)
    missing = [d for d in panel.dates if d not in market_dates]
    if missing:
        shown = ", ".join(d.isoformat() for d in missing[:5])
        raise DataError(f"{len(missing)} panel date(s) absent from market calendar: {shown}")
    days: dict[str, list[dt.date]] = {}
    for day in panel.dates:
        days.setdefault(month_key(day), []).append(day)
    months = sorted(days)
    return MonthPartition(months=months, days=days)
