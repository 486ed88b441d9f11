"""CSV/JSON artifact writers and readers.

Every artifact embeds the config hash: CSV files carry a leading
``# config_hash=<sha256>`` comment line (skipped by the readers here and in
panel ingestion), JSON files carry a ``config_hash`` field. Floats are
written with ``repr`` so values round-trip exactly and identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from pathlib import Path

import numpy as np

from .backtest import ForecastSeries
from .errors import DataError
from .features import FEATURE_NAMES, FeatureMatrix
from .labels import LabelSeries
from .panel import DailyPanel, MarketSeries
from .simulate import SimOutput, security_ids


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows, config_hash: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: Path, payload: dict, config_hash: str):
    payload = dict(payload)
    payload["config_hash"] = config_hash
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_rows(path: Path, required: list[str]) -> list[dict]:
    """All rows of a headered CSV as dicts, skipping comment lines."""
    if not path.exists():
        raise DataError(f"missing artifact: {path}")
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row:
                continue
            if row[0].startswith("#"):
                continue
            if header is None:
                header = row
                missing = [c for c in required if c not in header]
                if missing:
                    raise DataError(f"{path}: header is missing columns {missing}")
                continue
            out.append(dict(zip(header, row)))
    if header is None:
        raise DataError(f"{path}: empty file")
    return out


def _parse_opt_float(token: str) -> float:
    return float(token) if token not in ("", None) else math.nan


# ---------------------------------------------------------------------------
# Simulation outputs (panel/market in the ingestion contract).

def write_panel_csv(path: Path, panel: DailyPanel, config_hash: str):
    def rows():
        ids_cache: dict[int, list[str]] = {}
        for day in panel.dates:
            cs = panel.days[day]
            ids = ids_cache.setdefault(cs.n_stocks, security_ids(cs.n_stocks))
            iso = day.isoformat()
            for i in range(cs.n_stocks):
                yield (
                    iso, ids[i], cs.ret[i], cs.prc[i], cs.vol[i], cs.shrout[i],
                    int(cs.share_ok[i]), int(cs.exch_ok[i]),
                )

    write_csv(
        path,
        ["date", "security_id", "ret", "prc", "vol", "shrout", "shrcd_ok", "exchcd_ok"],
        rows(),
        config_hash,
    )


def write_market_csv(path: Path, market: MarketSeries, config_hash: str):
    rows = ((d.isoformat(), r) for d, r in zip(market.dates, market.mkt_ret))
    write_csv(path, ["date", "mkt_ret"], rows, config_hash)


def write_true_regime_csv(path: Path, sim: SimOutput, config_hash: str):
    rows = ((m, int(v)) for m, v in sim.true_regime.items())
    write_csv(path, ["month", "stress"], rows, config_hash)


def read_true_regime(path: Path) -> dict[str, bool]:
    return {r["month"]: r["stress"] == "1" for r in read_rows(path, ["month", "stress"])}


# ---------------------------------------------------------------------------
# Features / labels.

def write_features_csv(path: Path, features: FeatureMatrix, config_hash: str):
    rows = (
        (month, *features.values[i]) for i, month in enumerate(features.months)
    )
    write_csv(path, ["month", *FEATURE_NAMES], rows, config_hash)


def read_features(path: Path) -> FeatureMatrix:
    rows = read_rows(path, ["month", *FEATURE_NAMES])
    months = [r["month"] for r in rows]
    values = np.array([[float(r[c]) for c in FEATURE_NAMES] for r in rows])
    return FeatureMatrix(months=months, values=values)


def write_labels_csv(path: Path, labels: LabelSeries, config_hash: str):
    rows = (
        (m, labels.r_mkt[i], labels.sigma_mkt[i], labels.q_prev[i],
         int(labels.s[i]), "" if math.isnan(labels.y_next[i]) else int(labels.y_next[i]))
        for i, m in enumerate(labels.months)
    )
    write_csv(path, ["month", "R_mkt", "sigma_mkt", "q_prev", "S", "Y_next"], rows, config_hash)


def read_labels(path: Path) -> LabelSeries:
    rows = read_rows(path, ["month", "R_mkt", "sigma_mkt", "q_prev", "S", "Y_next"])
    return LabelSeries(
        months=[r["month"] for r in rows],
        r_mkt=np.array([float(r["R_mkt"]) for r in rows]),
        sigma_mkt=np.array([float(r["sigma_mkt"]) for r in rows]),
        q_prev=np.array([float(r["q_prev"]) for r in rows]),
        s=np.array([int(r["S"]) for r in rows], dtype=np.int64),
        y_next=np.array([_parse_opt_float(r["Y_next"]) for r in rows]),
    )


# ---------------------------------------------------------------------------
# Forecasts.

def write_forecasts_csv(path: Path, forecasts: ForecastSeries, config_hash: str):
    def rows():
        for j, month in enumerate(forecasts.months):
            for model in forecasts.models:
                yield (
                    month, model, forecasts.raw[model][j], forecasts.prob[model][j],
                    "" if math.isnan(forecasts.y_next[j]) else int(forecasts.y_next[j]),
                    forecasts.next_vol[j], forecasts.next_ret[j],
                )

    write_csv(
        path,
        ["month", "model", "raw_score", "probability", "y_next", "next_vol", "next_ret"],
        rows(),
        config_hash,
    )


def read_forecasts(path: Path, labels: LabelSeries) -> ForecastSeries:
    """Rebuild a ForecastSeries from forecasts.csv plus the label series
    (which supplies the current-month market controls)."""
    rows = read_rows(
        path, ["month", "model", "raw_score", "probability", "y_next", "next_vol", "next_ret"]
    )
    months: list[str] = []
    models: list[str] = []
    for r in rows:
        if r["month"] not in months:
            months.append(r["month"])
        if r["model"] not in models:
            models.append(r["model"])
    raw = {m: np.full(len(months), np.nan) for m in models}
    prob = {m: np.full(len(months), np.nan) for m in models}
    y_next = np.full(len(months), np.nan)
    next_vol = np.full(len(months), np.nan)
    next_ret = np.full(len(months), np.nan)
    month_pos = {m: i for i, m in enumerate(months)}
    for r in rows:
        j = month_pos[r["month"]]
        raw[r["model"]][j] = float(r["raw_score"])
        prob[r["model"]][j] = float(r["probability"])
        y_next[j] = _parse_opt_float(r["y_next"])
        next_vol[j] = _parse_opt_float(r["next_vol"])
        next_ret[j] = _parse_opt_float(r["next_ret"])

    label_pos = {m: i for i, m in enumerate(labels.months)}
    missing = [m for m in months if m not in label_pos]
    if missing:
        raise DataError(f"forecast months missing from labels: {missing[:5]}")
    idx = [label_pos[m] for m in months]
    return ForecastSeries(
        months=months, models=tuple(models), raw=raw, prob=prob,
        y_next=y_next, next_vol=next_vol, next_ret=next_ret,
        r_mkt=labels.r_mkt[idx], sigma_mkt=labels.sigma_mkt[idx],
        selected={}, seed=0,
    )
