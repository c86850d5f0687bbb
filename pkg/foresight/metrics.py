"""Regression metrics on de-normalized prices and their tabular rendering."""
from __future__ import annotations

import decimal
import math

import numpy as np
import pandas as pd
from pyrsistent import PClass, field

TABLE_COLUMNS = ("MSE", "MAE", "MAPE (%)", "RMSE", "R²")
DECIMAL_PLACES = 4


class MetricError(ValueError):
    ...


class MetricsReport(PClass):
    mse = field(type=float, mandatory=True, factory=float)
    mae = field(type=float, mandatory=True, factory=float)
    mape_percent = field(type=float, mandatory=True, factory=float)
    rmse = field(type=float, mandatory=True, factory=float)
    r2 = field(type=float, mandatory=True, factory=float)
    n = field(type=int, mandatory=True)

    def __invariant__(self):
        return (
            (self.mse >= 0 and self.mae >= 0 and self.rmse >= 0, "error metrics must be non-negative"),
            (self.mape_percent >= 0, "MAPE must be non-negative"),
            (abs(self.rmse - math.sqrt(self.mse)) <= 1e-12 * max(1.0, self.rmse), "rmse must equal sqrt(mse)"),
            (self.r2 <= 1.0, "R² cannot exceed 1"),
        )

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mae": self.mae,
            "mape_percent": self.mape_percent,
            "rmse": self.rmse,
            "r2": self.r2,
            "n": self.n,
        }


def evaluate(y_true, y_pred) -> MetricsReport:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise MetricError(f"y_true and y_pred must be 1-D and of equal length, got {y_true.shape} and {y_pred.shape}")
    if len(y_true) < 2:
        raise MetricError(f"At least 2 samples are needed, got {len(y_true)}")
    if not (np.all(np.isfinite(y_true)) and np.all(np.isfinite(y_pred))):
        raise MetricError("y_true and y_pred must be finite")
    if np.any(y_true == 0.0):
        raise MetricError("MAPE is undefined when y_true contains zero")

    residuals = y_true - y_pred
    total_sum_of_squares = np.sum(np.square(y_true - np.mean(y_true)))
    if total_sum_of_squares == 0.0:
        raise MetricError("R² is undefined for a constant y_true")

    mse = float(np.mean(np.square(residuals)))
    return MetricsReport(
        mse=mse,
        mae=float(np.mean(np.abs(residuals))),
        mape_percent=float(100.0 * np.mean(np.abs(residuals) / np.abs(y_true))),
        rmse=math.sqrt(mse),
        r2=float(1.0 - np.sum(np.square(residuals)) / total_sum_of_squares),
        n=len(y_true),
    )


def persistence_forecast(windows, target_index) -> np.ndarray:
    """Next-step forecast that repeats the most recent value of the target column of every window."""
    windows = np.asarray(windows, dtype=np.float64)
    return windows[:, -1, target_index].copy()


def format_metric(value: float, places: int = DECIMAL_PLACES) -> str:
    """Rounds half-up on the shortest decimal representation, so ``0.99325`` renders as ``0.9933``."""
    if not math.isfinite(value):
        return str(value)
    quantum = decimal.Decimal(1).scaleb(-places)
    return str(decimal.Decimal(repr(float(value))).quantize(quantum, rounding=decimal.ROUND_HALF_UP))


def metrics_table(per_symbol, *, model=None) -> pd.DataFrame:
    """One formatted row per symbol in lexicographic order, columns as in the published comparison tables."""
    if not per_symbol:
        raise MetricError("metrics_table needs at least one report")

    rows = []
    for symbol in sorted(per_symbol):
        report = per_symbol[symbol]
        values = (report.mse, report.mae, report.mape_percent, report.rmse, report.r2)
        row = {"symbol": symbol}
        if model is not None:
            row["model"] = model
        row.update({column: format_metric(value) for column, value in zip(TABLE_COLUMNS, values)})
        rows.append(row)
    return pd.DataFrame(rows)


__all__ = [
    "MetricError",
    "MetricsReport",
    "TABLE_COLUMNS",
    "evaluate",
    "format_metric",
    "metrics_table",
    "persistence_forecast",
]
