"""Pipeline configuration: one flat JSON file, defaults pre-filled.

Every stage reads the same config object; the SHA-256 hash of the canonical
JSON encoding is embedded in every artifact for provenance verification.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .backtest import BacktestConfig
from .errors import ConfigError
from .features import TailThreshold
from .labels import StressConfig
from .panel import EligibilityFilter
from .simulate import RegimeParams, SimConfig


def _lambda_grid() -> list:
    from .backtest import _default_lambda_grid

    return list(_default_lambda_grid())


@dataclass
class PipelineConfig:
    # inputs/outputs (None means "<out_dir>/<name>.csv" from an earlier stage)
    panel_csv: str | None = None
    market_csv: str | None = None
    out_dir: str = "out"

    # eligibility filter
    min_abs_price: float = 1.0
    require_share_class: bool = True
    require_exchange: bool = True

    # features
    tail_threshold: float = 0.05

    # stress labeling
    return_cutoff: float = -0.05
    vol_quantile: float = 0.90
    min_history_months: int = 36

    # backtest
    initial_window_months: int = 120
    cv_folds: int = 5
    min_validation_months: int = 6
    l1_grid: list = field(default_factory=_lambda_grid)
    l2_grid: list = field(default_factory=_lambda_grid)
    rf_trees: int = 500
    rf_max_depth: int = 8
    rf_min_leaf: int = 5
    gb_stage_grid: list = field(default_factory=lambda: [50, 100, 200, 400])
    gb_max_depth: int = 2
    gb_shrinkage: float = 0.1
    models: list = field(default_factory=lambda: ["l1", "l2", "rf", "gb"])
    seed: int = 7
    calibration_fraction: float = 0.2
    calibration_min_months: int = 12

    # evaluation
    ece_bins: int = 10
    bin_edges: list = field(default_factory=lambda: [0.0, 0.05, 0.10, 0.20, 0.40, 1.0])
    bootstrap_block: int = 12
    bootstrap_reps: int = 2000
    benchmark: str = "l2"

    # econometrics
    hac_lag: int = 6
    crash_cutoff: float = -0.05
    lp_horizon: int = 12
    lp_outcome: str = "sigma_mkt"
    lp_controls: bool = True
    regress_model: str = "l1"

    # simulation
    sim_n_stocks: int = 500
    sim_n_years: int = 40
    sim_trading_days_per_year: int = 252
    sim_start_year: int = 1980
    sim_p_calm_to_stress: float = 0.04
    sim_p_stress_to_calm: float = 0.35
    sim_calm_mkt_drift: float = 0.0005
    sim_calm_mkt_vol: float = 0.0075
    sim_calm_dispersion: float = 0.015
    sim_calm_tail_prob: float = 0.003
    sim_calm_volume_scale: float = 1.0
    sim_stress_mkt_drift: float = -0.003
    sim_stress_mkt_vol: float = 0.022
    sim_stress_dispersion: float = 0.035
    sim_stress_tail_prob: float = 0.05
    sim_stress_volume_scale: float = 1.8

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"unknown config field '{unknown[0]}'")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if not 0 < self.tail_threshold:
            raise ConfigError(f"tail_threshold must be > 0, got {self.tail_threshold}")
        if self.ece_bins < 1:
            raise ConfigError(f"ece_bins must be >= 1, got {self.ece_bins}")
        if self.bootstrap_block < 1 or self.bootstrap_reps < 1:
            raise ConfigError("bootstrap_block and bootstrap_reps must be >= 1")
        if self.benchmark not in self.models:
            raise ConfigError(
                f"benchmark '{self.benchmark}' is not among models {self.models}"
            )
        if self.lp_horizon < 0:
            raise ConfigError(f"lp_horizon must be >= 0, got {self.lp_horizon}")
        if self.regress_model not in self.models:
            raise ConfigError(
                f"regress_model '{self.regress_model}' is not among models {self.models}"
            )
        # delegate the rest to the owning dataclasses
        self.eligibility_filter()
        self.stress_config()
        self.sim_config().validate()
        self.backtest_config().validate()

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # ---- stage config builders -------------------------------------------

    def eligibility_filter(self) -> EligibilityFilter:
        return EligibilityFilter(
            min_abs_price=self.min_abs_price,
            require_share_class=self.require_share_class,
            require_exchange=self.require_exchange,
        )

    def tail(self) -> TailThreshold:
        return TailThreshold(tau=self.tail_threshold)

    def stress_config(self) -> StressConfig:
        return StressConfig(
            return_cutoff=self.return_cutoff,
            vol_quantile=self.vol_quantile,
            min_history_months=self.min_history_months,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(
            n_stocks=self.sim_n_stocks,
            n_years=self.sim_n_years,
            trading_days_per_year=self.sim_trading_days_per_year,
            start_year=self.sim_start_year,
            calm=RegimeParams(
                mkt_drift=self.sim_calm_mkt_drift,
                mkt_vol=self.sim_calm_mkt_vol,
                dispersion=self.sim_calm_dispersion,
                tail_prob=self.sim_calm_tail_prob,
                volume_scale=self.sim_calm_volume_scale,
            ),
            stress=RegimeParams(
                mkt_drift=self.sim_stress_mkt_drift,
                mkt_vol=self.sim_stress_mkt_vol,
                dispersion=self.sim_stress_dispersion,
                tail_prob=self.sim_stress_tail_prob,
                volume_scale=self.sim_stress_volume_scale,
            ),
            p_calm_to_stress=self.sim_p_calm_to_stress,
            p_stress_to_calm=self.sim_p_stress_to_calm,
            seed=self.seed,
        )

    def backtest_config(self) -> BacktestConfig:
        return BacktestConfig(
            initial_window_months=self.initial_window_months,
            cv_folds=self.cv_folds,
            min_validation_months=self.min_validation_months,
            l1_grid=tuple(float(v) for v in self.l1_grid),
            l2_grid=tuple(float(v) for v in self.l2_grid),
            rf_trees=self.rf_trees,
            rf_max_depth=self.rf_max_depth,
            rf_min_leaf=self.rf_min_leaf,
            gb_stage_grid=tuple(int(v) for v in self.gb_stage_grid),
            gb_max_depth=self.gb_max_depth,
            gb_shrinkage=self.gb_shrinkage,
            models=tuple(self.models),
            seed=self.seed,
            calibration_fraction=self.calibration_fraction,
            calibration_min_months=self.calibration_min_months,
        )
