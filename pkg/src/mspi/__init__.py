"""Market stress probability index pipeline.

Builds monthly cross-sectional fragility signals from a daily stock panel,
labels stress months with a real-time expanding-quantile rule, learns
one-month-ahead stress probabilities under a strict expanding-window
protocol, and evaluates the forecasts with proper scoring rules,
calibration diagnostics, block-bootstrap inference, and predictive
regressions.
"""

__version__ = "0.1.0"
