"""Command-line pipeline orchestration.

Subcommands cover the full run: simulate, features, label, backtest,
evaluate, bootstrap, bins, regress, lp, report. All stages share one flat
JSON config (--config); --out, --seed, and --threads override the config's
out_dir, seed, and worker cap. Exit codes: 0 success, 2 config error,
3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import econometrics as econ
from . import evaluation as ev
from .artifacts import (
    read_features,
    read_forecasts,
    read_labels,
    write_csv,
    write_features_csv,
    write_forecasts_csv,
    write_json,
    write_labels_csv,
    write_market_csv,
    write_panel_csv,
    write_true_regime_csv,
)
from .backtest import run_expanding_backtest
from .config import PipelineConfig
from .errors import ConfigError, DataError, MspiError, NumericError
from .features import TailThreshold, aggregate_monthly, compute_daily_stats
from .labels import build_market_monthly, label_stress
from .panel import load_daily_panel, load_market_series, partition_months
from .simulate import simulate

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "simulate", "features", "label", "backtest", "evaluate",
    "bootstrap", "bins", "regress", "lp", "report",
)


def _out_dir(cfg: PipelineConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _input_path(cfg: PipelineConfig, explicit: str | None, default_name: str) -> Path:
    path = Path(explicit) if explicit else Path(cfg.out_dir) / default_name
    if not path.exists():
        raise DataError(f"missing input file: {path}")
    return path


def _artifact(cfg: PipelineConfig, name: str) -> Path:
    path = Path(cfg.out_dir) / name
    if not path.exists():
        raise DataError(f"missing upstream artifact: {path} (run the producing stage first)")
    return path


def _load_panel_inputs(cfg: PipelineConfig):
    panel_path = _input_path(cfg, cfg.panel_csv, "panel.csv")
    market_path = _input_path(cfg, cfg.market_csv, "market.csv")
    panel, summary = load_daily_panel(str(panel_path), cfg.eligibility_filter())
    market = load_market_series(str(market_path))
    return panel, market, summary


# ---------------------------------------------------------------------------
# Stage implementations.

def cmd_simulate(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    sim = simulate(cfg.sim_config())
    write_panel_csv(out / "panel.csv", sim.panel, h)
    write_market_csv(out / "market.csv", sim.market, h)
    write_true_regime_csv(out / "true_regime.csv", sim, h)
    logger.info("simulated %d trading days across %d months -> %s",
                len(sim.panel.dates), len(sim.true_regime), out)
    return 0


def cmd_features(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    panel, market, summary = _load_panel_inputs(cfg)
    partition = partition_months(panel, market)
    stats = compute_daily_stats(panel, cfg.tail())
    features = aggregate_monthly(stats, partition)
    write_features_csv(out / "features.csv", features, h)
    if getattr(args, "ingest_summary", False):
        write_json(out / "ingest_summary.json", summary.to_dict(), h)
    logger.info("wrote %d monthly feature rows", len(features.months))
    return 0


def cmd_label(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    panel, market, _ = _load_panel_inputs(cfg)
    partition = partition_months(panel, market)
    monthly = build_market_monthly(market, partition)
    labels = label_stress(monthly, cfg.stress_config())
    write_labels_csv(out / "labels.csv", labels, h)
    logger.info("labeled %d months, stress rate %.3f", len(labels.months),
                float(np.mean(labels.s)))
    return 0


def cmd_backtest(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    features = read_features(_artifact(cfg, "features.csv"))
    labels = read_labels(_artifact(cfg, "labels.csv"))
    forecasts = run_expanding_backtest(features, labels, cfg.backtest_config(),
                                       threads=args.threads)
    write_forecasts_csv(out / "forecasts.csv", forecasts, h)
    write_json(out / "provenance.json", {
        "seed": forecasts.seed,
        "selected_hyperparameters": forecasts.selected,
        "n_forecast_months": len(forecasts.months),
        "first_month": forecasts.months[0],
        "last_month": forecasts.months[-1],
        "models": list(forecasts.models),
        "warnings": forecasts.warnings,
    }, h)
    logger.info("wrote %d forecast months for models %s", len(forecasts.months),
                ",".join(forecasts.models))
    return 0


def _load_forecasts(cfg: PipelineConfig):
    labels = read_labels(_artifact(cfg, "labels.csv"))
    return read_forecasts(_artifact(cfg, "forecasts.csv"), labels), labels


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    forecasts, _ = _load_forecasts(cfg)
    report = ev.compute_metrics(forecasts, cfg.ece_bins)
    write_json(out / "metrics.json", report.to_dict(), h)

    def curve_rows():
        for cs in ev.compute_curves(forecasts, cfg.ece_bins):
            for x, y in zip(*cs.roc):
                yield (cs.model, "roc", x, y, "")
            for x, y in zip(*cs.pr):
                yield (cs.model, "pr", x, y, "")
            cal = cs.calibration
            for x, y, c in zip(cal.mean_prob, cal.event_rate, cal.count):
                yield (cs.model, "calibration", x, y, int(c))

    write_csv(out / "curves.csv", ["model", "curve", "x", "y", "count"], curve_rows(), h)
    _write_bins(cfg, forecasts, out, h)
    logger.info("metrics over %d months (event rate %.3f)", report.n, report.event_rate)
    return 0


def _write_bins(cfg: PipelineConfig, forecasts, out: Path, h: str):
    def bin_rows():
        for model in forecasts.models:
            bo = ev.binned_outcomes(forecasts, model, tuple(cfg.bin_edges))
            for b in range(len(bo.n)):
                yield (model, bo.edges[b], bo.edges[b + 1], int(bo.n[b]), bo.mean_prob[b],
                       bo.stress_rate[b], bo.next_vol[b], bo.next_ret[b])

    write_csv(
        out / "bins.csv",
        ["model", "bin_lo", "bin_hi", "n", "mean_prob", "stress_rate", "next_vol", "next_ret"],
        bin_rows(), h,
    )


def cmd_bins(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    forecasts, _ = _load_forecasts(cfg)
    _write_bins(cfg, forecasts, out, cfg.config_hash())
    return 0


def cmd_bootstrap(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    forecasts, _ = _load_forecasts(cfg)
    rows = ev.bootstrap_table(
        forecasts, benchmark=cfg.benchmark, block_len=cfg.bootstrap_block,
        reps=cfg.bootstrap_reps, seed=cfg.seed,
    )
    write_json(out / "bootstrap.json", {
        "benchmark": cfg.benchmark,
        "block_len": cfg.bootstrap_block,
        "replications": cfg.bootstrap_reps,
        "rows": [r.to_dict() for r in rows],
    }, cfg.config_hash())
    logger.info("bootstrap table with %d rows", len(rows))
    return 0


def cmd_regress(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    forecasts, _ = _load_forecasts(cfg)
    vol = econ.predictive_vol_regression(forecasts, model=cfg.regress_model,
                                         hac_lag=cfg.hac_lag)
    crash = econ.crash_regression(forecasts, cutoff=cfg.crash_cutoff,
                                  model=cfg.regress_model, hac_lag=cfg.hac_lag)
    innov = econ.mspi_innovations(forecasts, model=cfg.regress_model, hac_lag=cfg.hac_lag)
    write_json(out / "regression.json", {
        "model": cfg.regress_model,
        "predictive_volatility": vol.to_dict(),
        "crash": crash.to_dict(),
        "innovations": {
            "regression": innov.regression.to_dict(),
            "residual_std": float(np.std(innov.innovations)),
            "n": len(innov.months),
        },
    }, cfg.config_hash())
    return 0


def cmd_lp(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    forecasts, _ = _load_forecasts(cfg)
    features = None
    if (Path(cfg.out_dir) / "features.csv").exists():
        features = read_features(Path(cfg.out_dir) / "features.csv")
    innov = econ.mspi_innovations(forecasts, model=cfg.regress_model, hac_lag=cfg.hac_lag)
    outcome = econ.lp_outcome_series(forecasts, cfg.lp_outcome, cfg.crash_cutoff, features)
    # innovations start at the second forecast month; controls are lagged one more
    u = innov.innovations[1:]
    y = outcome[2:]
    controls = None
    if cfg.lp_controls:
        controls = np.column_stack([forecasts.r_mkt, forecasts.sigma_mkt])[1:-1]
    result = econ.local_projections(u, y, controls, cfg.lp_horizon,
                                    outcome_name=cfg.lp_outcome)
    rows = (
        (h, result.b[i], result.se[i], int(result.n_obs[i]))
        for i, h in enumerate(result.horizons)
    )
    write_csv(out / "local_projections.csv", ["h", "b_h", "se_h", "n_h"], rows,
              cfg.config_hash())
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    out = _out_dir(cfg)
    h = cfg.config_hash()
    metrics = json.loads(_artifact(cfg, "metrics.json").read_text(encoding="utf-8"))
    bootstrap = json.loads(_artifact(cfg, "bootstrap.json").read_text(encoding="utf-8"))
    regression = None
    reg_path = Path(cfg.out_dir) / "regression.json"
    if reg_path.exists():
        regression = json.loads(reg_path.read_text(encoding="utf-8"))
    bins_rows = _read_bins_rows(cfg)

    payload = {
        "metrics": metrics,
        "bins": bins_rows,
        "bootstrap": bootstrap,
        "regression": regression,
        "settings": {
            "ece_bins": cfg.ece_bins,
            "bootstrap_block_len": cfg.bootstrap_block,
            "bootstrap_replications": cfg.bootstrap_reps,
            "benchmark": cfg.benchmark,
        },
    }
    write_json(out / "report.json", payload, h)
    (out / "report.txt").write_text(_render_report(cfg, metrics, bins_rows, bootstrap,
                                                   regression), encoding="utf-8")
    return 0


def _read_bins_rows(cfg: PipelineConfig) -> list[dict]:
    from .artifacts import read_rows

    return read_rows(
        _artifact(cfg, "bins.csv"),
        ["model", "bin_lo", "bin_hi", "n", "mean_prob", "stress_rate", "next_vol", "next_ret"],
    )


def _render_report(cfg, metrics, bins_rows, bootstrap, regression) -> str:
    lines = []
    lines.append("Market stress probability index: out-of-sample report")
    lines.append("=" * 70)
    lines.append("")
    lines.append(f"Months evaluated: {metrics['n']}   "
                 f"event rate: {metrics['event_rate']:.3f}")
    lines.append(f"ECE bins: {cfg.ece_bins} (equal-mass)   "
                 f"bootstrap: {cfg.bootstrap_block}-month blocks, "
                 f"{cfg.bootstrap_reps} replications")
    lines.append("")
    lines.append("Discrimination and probability accuracy")
    lines.append("-" * 70)
    lines.append(f"{'model':<8}{'AUC':>8}{'PR-AUC':>8}{'Brier':>8}{'LogLoss':>9}"
                 f"{'ECE':>8}{'MeanP':>8}")
    for name, m in metrics["models"].items():
        lines.append(
            f"{name:<8}{m['auc']:>8.3f}{m['pr_auc']:>8.3f}{m['brier']:>8.3f}"
            f"{m['log_loss']:>9.3f}{m['ece']:>8.3f}{m['mean_prob']:>8.3f}"
        )
    lines.append("")
    lines.append("Realized outcomes by probability bin")
    lines.append("-" * 70)
    lines.append(f"{'model':<8}{'bin':<16}{'N':>5}{'meanP':>8}{'stress':>8}"
                 f"{'vol+1':>8}{'ret+1':>8}")
    for r in bins_rows:
        label = f"[{float(r['bin_lo']):.2f},{float(r['bin_hi']):.2f})"
        sr = r["stress_rate"]
        lines.append(
            f"{r['model']:<8}{label:<16}{r['n']:>5}"
            + "".join(
                f"{(float(v) if v not in ('', None) else float('nan')):>8.3f}"
                for v in (r["mean_prob"], sr, r["next_vol"], r["next_ret"])
            )
        )
    lines.append("")
    lines.append(f"Block-bootstrap deltas vs benchmark "
                 f"({bootstrap['benchmark']}; {bootstrap['block_len']}-month blocks, "
                 f"{bootstrap['replications']} replications)")
    lines.append("-" * 70)
    lines.append(f"{'metric':<10}{'model':<8}{'delta':>10}{'ci lo':>10}{'ci hi':>10}"
                 f"{'p':>8}")
    for r in bootstrap["rows"]:
        lines.append(
            f"{r['metric']:<10}{r['model']:<8}{r['delta']:>10.4f}{r['ci_lo']:>10.4f}"
            f"{r['ci_hi']:>10.4f}{r['p_value']:>8.3f}"
        )
    if regression is not None:
        lines.append("")
        lines.append("Predictive regressions")
        lines.append("-" * 70)
        pv = regression["predictive_volatility"]
        lines.append(f"next-month volatility on index level: gamma={pv['gamma']:.4f} "
                     f"(delta R2 {pv['delta_r2']:.4f})")
        cr = regression["crash"]
        lines.append(f"crash indicator (cutoff {cr['cutoff']}): "
                     f"crash rate {cr['crash_rate']:.3f}")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point.

_HANDLERS = {
    "simulate": cmd_simulate,
    "features": cmd_features,
    "label": cmd_label,
    "backtest": cmd_backtest,
    "evaluate": cmd_evaluate,
    "bootstrap": cmd_bootstrap,
    "bins": cmd_bins,
    "regress": cmd_regress,
    "lp": cmd_lp,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mspi",
        description="Market stress probability index pipeline",
    )
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", help="path to the flat JSON config file")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, help="master seed (overrides config seed)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap for parallel stages (default 1)")
        if name == "features":
            p.add_argument("--ingest-summary", action="store_true",
                           help="also write ingest_summary.json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
        if args.out:
            cfg.out_dir = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None and args.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {args.threads}")
        cfg.validate()
        return _HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except MspiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
