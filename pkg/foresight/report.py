"""Writers and readers for every artifact an experiment emits, plus the optional SVG figures.

CSV reals are written with 17 significant digits so that the readers recover the exact values.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pyrsistent import pvector

from foresight.indicators import FeatureTable
from foresight.metrics import MetricsReport
from foresight.xai import Attribution, GlobalSummary

FLOAT_FORMAT = "%.17g"
FLOAT_PRECISION = "round_trip"
SCORE_UNITS = "normalized_target"
LOCAL_HEADER_KEYS = ("method", "base_value", "prediction", "target_date", "units")
SWEEP_COLUMNS = ("symbol", "model", "seq_len", "mse", "mae", "mape_percent", "rmse", "r2", "n", "is_best")
FIGURE_SIZE = (10, 5)
TOP_FEATURES = 20


class ReportError(ValueError):
    ...


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(record, path) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _read_csv(path, **kwargs) -> pd.DataFrame:
    return pd.read_csv(path, float_precision=FLOAT_PRECISION, encoding="utf-8", **kwargs)


def _write_csv(frame: pd.DataFrame, path, index=False) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path


def write_feature_table(table: FeatureTable, path) -> Path:
    """``date`` followed by the canonical feature columns."""
    frame = table.frame.copy()
    frame.index = frame.index.strftime("%Y-%m-%d")
    frame.index.name = "date"
    return _write_csv(frame, path, index=True)


def read_feature_table(path, symbol: str, target_column: str = "close") -> FeatureTable:
    frame = _read_csv(path, index_col="date", parse_dates=["date"]).astype(np.float64)
    return FeatureTable(symbol=symbol, frame=frame, target_column=target_column)


def write_metrics(report: MetricsReport, path) -> Path:
    return write_json(report.to_dict(), path)


def read_metrics(path) -> MetricsReport:
    record = read_json(path)
    expected = {"mse", "mae", "mape_percent", "rmse", "r2", "n"}
    if set(record) != expected:
        raise ReportError(f"{path}: metrics keys {sorted(record)} differ from {sorted(expected)}")
    return MetricsReport(**record)


def write_metrics_table(table: pd.DataFrame, path) -> Path:
    return _write_csv(table, path)


def read_metrics_table(path) -> pd.DataFrame:
    return _read_csv(path, dtype=str, keep_default_na=False)


def write_predictions(predictions: pd.DataFrame, path) -> Path:
    frame = predictions.copy()
    frame.index = pd.DatetimeIndex(frame.index).strftime("%Y-%m-%d")
    frame.index.name = "date"
    return _write_csv(frame, path, index=True)


def read_predictions(path) -> pd.DataFrame:
    frame = _read_csv(path, index_col="date", parse_dates=["date"])
    if list(frame.columns) != ["y_true", "y_pred"]:
        raise ReportError(f"{path}: expected columns y_true,y_pred, got {','.join(frame.columns)}")
    return frame.astype(np.float64)


def write_loss_curve(loss_frame: pd.DataFrame, path) -> Path:
    return _write_csv(loss_frame, path)


def read_loss_curve(path) -> pd.DataFrame:
    return _read_csv(path, dtype={"epoch": np.int64, "train_loss": np.float64, "test_loss": np.float64})


def write_shap_global(summary: GlobalSummary, path) -> Path:
    frame = pd.DataFrame(
        {"feature": list(summary.ranking), "mean_abs_shap": [summary.mean_abs[name] for name in summary.ranking]}
    )
    return _write_csv(frame, path)


def read_shap_global(path, n_instances=1) -> GlobalSummary:
    frame = _read_csv(path, dtype={"feature": str, "mean_abs_shap": np.float64}, keep_default_na=False)
    mean_abs = dict(zip(frame["feature"], frame["mean_abs_shap"].tolist()))
    return GlobalSummary(mean_abs=mean_abs, ranking=pvector(frame["feature"]), n_instances=n_instances)


def write_local_explanation(attribution: Attribution, path) -> Path:
    """``key,value`` header lines followed by ``feature,score`` rows in ranked order."""
    path = _prepare(path)
    header = {
        "method": attribution.method,
        "base_value": FLOAT_FORMAT % attribution.base_value,
        "prediction": FLOAT_FORMAT % attribution.prediction,
        "target_date": attribution.target_date or "",
        "units": SCORE_UNITS,
    }
    lines = [f"{key},{header[key]}" for key in LOCAL_HEADER_KEYS]
    lines.append("feature,score")
    lines.extend(f"{name},{FLOAT_FORMAT % score}" for name, score in attribution.ranked())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_local_explanation(path) -> Attribution:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = dict(line.split(",", 1) for line in lines[: len(LOCAL_HEADER_KEYS)])
    if tuple(header) != LOCAL_HEADER_KEYS or lines[len(LOCAL_HEADER_KEYS)] != "feature,score":
        raise ReportError(f"{path}: not a local explanation file")

    rows = [line.split(",", 1) for line in lines[len(LOCAL_HEADER_KEYS) + 1 :]]
    return Attribution(
        method=header["method"],
        feature_scores={name: float(score) for name, score in rows},
        base_value=float(header["base_value"]),
        prediction=float(header["prediction"]),
        target_date=header["target_date"] or None,
    )


def write_sweep_table(rows, path) -> Path:
    return _write_csv(pd.DataFrame(list(rows), columns=list(SWEEP_COLUMNS)), path)


def read_sweep_table(path) -> pd.DataFrame:
    frame = _read_csv(path, dtype={"symbol": str, "model": str}, keep_default_na=False)
    if tuple(frame.columns) != SWEEP_COLUMNS:
        raise ReportError(f"{path}: unexpected sweep columns {','.join(frame.columns)}")
    return frame.astype({"is_best": bool})


def _save(figure, path) -> Path:
    path = _prepare(path)
    with matplotlib.rc_context({"svg.hashsalt": "foresight"}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_predictions(predictions: pd.DataFrame, path, title="") -> Path:
    figure = Figure(figsize=FIGURE_SIZE)
    axes = figure.subplots()
    axes.plot(predictions.index, predictions["y_true"], label="actual")
    axes.plot(predictions.index, predictions["y_pred"], label="predicted")
    axes.set_title(title)
    axes.set_xlabel("date")
    axes.set_ylabel("close")
    axes.legend()
    figure.autofmt_xdate()
    return _save(figure, path)


def plot_loss_curve(loss_frame: pd.DataFrame, path, title="") -> Path:
    figure = Figure(figsize=FIGURE_SIZE)
    axes = figure.subplots()
    axes.plot(loss_frame["epoch"], loss_frame["train_loss"], label="train")
    axes.plot(loss_frame["epoch"], loss_frame["test_loss"], label="test")
    axes.set_yscale("log")
    axes.set_title(title)
    axes.set_xlabel("epoch")
    axes.set_ylabel("MSE (normalized)")
    axes.legend()
    return _save(figure, path)


def plot_shap_global(summary: GlobalSummary, path, title="", top=TOP_FEATURES) -> Path:
    names, values = zip(*summary.top(top))
    figure = Figure(figsize=(FIGURE_SIZE[0], max(3, 0.3 * len(names))))
    axes = figure.subplots()
    axes.barh(list(reversed(names)), list(reversed(values)))
    axes.set_title(title)
    axes.set_xlabel("mean |SHAP value|")
    figure.tight_layout()
    return _save(figure, path)


def plot_local_explanation(attribution: Attribution, path, title="") -> Path:
    names, values = zip(*attribution.ranked())
    colors = ["tab:red" if value < 0 else "tab:green" for value in reversed(values)]
    figure = Figure(figsize=(FIGURE_SIZE[0], max(3, 0.3 * len(names))))
    axes = figure.subplots()
    axes.barh(list(reversed(names)), list(reversed(values)), color=colors)
    axes.axvline(0.0, color="black", linewidth=0.8)
    axes.set_title(title)
    axes.set_xlabel(f"{attribution.method} score")
    figure.tight_layout()
    return _save(figure, path)


__all__ = [
    "ReportError",
    "plot_local_explanation",
    "plot_loss_curve",
    "plot_predictions",
    "plot_shap_global",
    "read_feature_table",
    "read_json",
    "read_local_explanation",
    "read_loss_curve",
    "read_metrics",
    "read_metrics_table",
    "read_predictions",
    "read_shap_global",
    "read_sweep_table",
    "write_feature_table",
    "write_json",
    "write_local_explanation",
    "write_loss_curve",
    "write_metrics",
    "write_metrics_table",
    "write_predictions",
    "write_shap_global",
    "write_sweep_table",
]
