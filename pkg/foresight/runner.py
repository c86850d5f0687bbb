"""End-to-end experiments over (symbol, model) pairs.

Every pair runs featurize, split, scale, window, train, evaluate and explain in sequence and only writes
its artifacts once all stages succeeded, so a failed pair leaves no files behind. Pairs are independent:
they may run on worker threads and each writes below its own ``<out>/<symbol>/<model>/`` directory.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pandas as pd
from loguru import logger
from pyrsistent import PClass, PMap, field, freeze, pvector_field, thaw

import foresight
from foresight import report
from foresight.config import ExperimentConfig, SymbolSource
from foresight.indicators import FeatureTable, build_feature_table
from foresight.market_data import parse_ohlcv_csv
from foresight.metrics import MetricsReport, evaluate, metrics_table, persistence_forecast
from foresight.models import ModelKind, load_checkpoint, save_checkpoint
from foresight.pipeline import WindowSpec, invert_minmax, prepare
from foresight.trainer import EpochLoss, TrainedModel, predict, train
from foresight.xai import LimeConfig, explain_final_instance, explain_global

MANIFEST_FILE = "manifest.json"
EXPLAIN_MANIFEST_FILE = "explain_manifest.json"
CHECKPOINT_FILE = "model.json"


class PairResult(PClass):
    symbol = field(type=str, mandatory=True)
    model = field(type=str, mandatory=True)
    seq_len = field(type=(int, type(None)), initial=None)
    status = field(type=str, mandatory=True, invariant=lambda status: (status in ("ok", "failed"), "unknown status"))
    error = field(type=(str, type(None)), initial=None)
    files = pvector_field(str)
    seconds = field(type=float, initial=0.0, factory=float)
    metrics = field(type=(MetricsReport, type(None)), initial=None)
    baseline = field(type=(MetricsReport, type(None)), initial=None)

    @property
    def succeeded(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "model": self.model,
            "seq_len": self.seq_len,
            "status": self.status,
            "error": self.error,
            "files": list(self.files),
            "seconds": self.seconds,
        }


class RunManifest(PClass):
    """What a command produced: the config it ran with, every file it wrote and how long each pair took.

    The manifest does not list itself.
    """

    command = field(type=str, mandatory=True)
    version = field(type=str, initial=foresight.__version__)
    config = field(type=PMap, mandatory=True, factory=freeze)
    pairs = pvector_field(PairResult)
    files = pvector_field(str)
    seconds = field(type=float, initial=0.0, factory=float)

    @property
    def failed(self) -> list[PairResult]:
        return [pair for pair in self.pairs if not pair.succeeded]

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "config": thaw(self.config),
            "pairs": [pair.to_dict() for pair in self.pairs],
            "files": list(self.files),
            "seconds": self.seconds,
        }


def pair_directory(out, symbol: str, kind: ModelKind) -> Path:
    return Path(out) / symbol / kind.value


def load_feature_table(source: SymbolSource) -> FeatureTable:
    return build_feature_table(parse_ohlcv_csv(source.path, source.symbol))


def _relative(out, paths) -> list[str]:
    return [Path(path).relative_to(out).as_posix() for path in paths]


def _failure(symbol, kind, seq_len, error, started) -> PairResult:
    logger.error(f"{symbol}/{kind.value}: {type(error).__name__}: {error}")
    return PairResult(
        symbol=symbol,
        model=kind.value,
        seq_len=seq_len,
        status="failed",
        error=f"{type(error).__name__}: {error}",
        seconds=time.perf_counter() - started,
    )


def _fit(config: ExperimentConfig, table: FeatureTable, kind: ModelKind, seq_len=None):
    train_config = config.train_config(kind, seq_len)
    data = prepare(table, WindowSpec(seq_len=train_config.seq_len), train_fraction=config.train_fraction)
    model = train(kind, data.train, data.test, train_config, scaler=data.scaler, hyper=config.hyper(kind))
    return data, model


def _baseline(data, model) -> MetricsReport:
    normalized = persistence_forecast(data.test.inputs, data.test.target_index)
    y_true = invert_minmax(model.scaler, model.target_column, data.test.targets)
    return evaluate(y_true, invert_minmax(model.scaler, model.target_column, normalized))


def _explanations(config: ExperimentConfig, data, model):
    settings = config.explain
    shap = explain_final_instance(
        model, data.test, "kernel_shap", reference=data.train, seed=config.seed, n_samples=settings.n_samples
    )
    lime_config = LimeConfig(n_perturb=settings.lime_n_perturb, top_k=settings.lime_top_k, seed=config.seed)
    lime = explain_final_instance(model, data.test, "lime", reference=data.train, lime_config=lime_config)
    summary = explain_global(
        model,
        data.test,
        reference=data.train,
        seed=config.seed,
        n_samples=settings.n_samples,
        limit=settings.global_limit,
    )
    return shap, lime, summary


def run_pair(config: ExperimentConfig, symbol: str, table: FeatureTable, kind: ModelKind) -> PairResult:
    started = time.perf_counter()
    seq_len = config.train_config(kind).seq_len
    try:
        data, model = _fit(config, table, kind)
        predictions = predict(model, data.test)
        metrics = evaluate(predictions["y_true"].to_numpy(), predictions["y_pred"].to_numpy())
        baseline = _baseline(data, model)
        shap, lime, summary = _explanations(config, data, model)
    except Exception as error:
        return _failure(symbol, kind, seq_len, error, started)

    logger.info(
        f"{symbol}/{kind.value}: MAPE {metrics.mape_percent:.4f}% vs persistence {baseline.mape_percent:.4f}%, "
        f"R² {metrics.r2:.4f}"
    )
    directory = pair_directory(config.out, symbol, kind)
    written = [
        report.write_metrics(metrics, directory / "metrics.json"),
        report.write_metrics(baseline, directory / "baseline_metrics.json"),
        report.write_predictions(predictions, directory / "predictions.csv"),
        report.write_loss_curve(model.loss_frame(), directory / "loss_curve.csv"),
        report.write_shap_global(summary, directory / "shap_global.csv"),
        report.write_local_explanation(shap, directory / "local_explanation_shap.csv"),
        report.write_local_explanation(lime, directory / "local_explanation_lime.csv"),
        save_checkpoint(model.params, directory / CHECKPOINT_FILE),
    ]
    if config.plots:
        title = f"{symbol} {kind.value}"
        written += [
            report.plot_predictions(predictions, directory / "predictions.svg", title),
            report.plot_loss_curve(model.loss_frame(), directory / "loss_curve.svg", title),
            report.plot_shap_global(summary, directory / "shap_global.svg", title),
            report.plot_local_explanation(lime, directory / "local_explanation_lime.svg", title),
        ]

    return PairResult(
        symbol=symbol,
        model=kind.value,
        seq_len=seq_len,
        status="ok",
        files=_relative(config.out, written),
        seconds=time.perf_counter() - started,
        metrics=metrics,
        baseline=baseline,
    )


def _load_tables(config: ExperimentConfig) -> dict:
    """Feature table per symbol, or the exception that prevented building it."""
    tables = {}
    for source in config.symbols:
        try:
            tables[source.symbol] = load_feature_table(source)
        except Exception as error:
            logger.error(f"{source.symbol}: cannot build features from {source.path}: {error}")
            tables[source.symbol] = error
    return tables


def _map_pairs(config: ExperimentConfig, tasks, work) -> list[PairResult]:
    tables = _load_tables(config)

    def guarded(task):
        symbol, kind = task[:2]
        table = tables[symbol]
        if isinstance(table, Exception):
            return _failure(symbol, kind, None, table, time.perf_counter())
        return work(table, *task)

    if config.workers == 1:
        return [guarded(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(guarded, tasks))


def _write_manifest(config, command, pairs, files, started, manifest_file=MANIFEST_FILE) -> RunManifest:
    manifest = RunManifest(
        command=command,
        config=config.to_dict(),
        pairs=pairs,
        files=sorted(files),
        seconds=time.perf_counter() - started,
    )
    missing = [name for name in manifest.files if not (Path(config.out) / name).is_file()]
    if missing:
        raise RuntimeError(f"Manifest lists files that were not written: {', '.join(missing)}")
    report.write_json(manifest.to_dict(), Path(config.out) / manifest_file)
    return manifest


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Runs every (symbol, model) pair and writes the combined metrics table and the manifest."""
    started = time.perf_counter()
    tasks = [(source.symbol, kind) for source in config.symbols for kind in config.models]
    logger.info(f"Running {len(tasks)} pair(s) with {config.workers} worker(s) into {config.out}")

    pairs = _map_pairs(config, tasks, lambda table, symbol, kind: run_pair(config, symbol, table, kind))
    files = [name for pair in pairs for name in pair.files]

    tables = []
    for kind in config.models:
        reports = {pair.symbol: pair.metrics for pair in pairs if pair.succeeded and pair.model == kind.value}
        if reports:
            tables.append(metrics_table(reports, model=kind.value))
    if tables:
        path = report.write_metrics_table(pd.concat(tables, ignore_index=True), Path(config.out) / "metrics_table.csv")
        files.append(_relative(config.out, [path])[0])

    manifest = _write_manifest(config, "run", pairs, files, started)
    logger.info(f"Finished {len(pairs) - len(manifest.failed)}/{len(pairs)} pair(s) in {manifest.seconds:.1f}s")
    return manifest


def sweep_pair(config: ExperimentConfig, symbol: str, table: FeatureTable, kind: ModelKind, seq_len: int):
    started = time.perf_counter()
    try:
        data, model = _fit(config, table, kind, seq_len)
        predictions = predict(model, data.test)
        metrics = evaluate(predictions["y_true"].to_numpy(), predictions["y_pred"].to_numpy())
    except Exception as error:
        return _failure(symbol, kind, seq_len, error, started)
    logger.info(f"{symbol}/{kind.value} seq_len {seq_len}: MSE {metrics.mse:.6g}")
    return PairResult(
        symbol=symbol,
        model=kind.value,
        seq_len=seq_len,
        status="ok",
        seconds=time.perf_counter() - started,
        metrics=metrics,
    )


def sweep_rows(pairs) -> list[dict]:
    """One row per successful (symbol, model, seq_len); the lowest-MSE row of each (symbol, model) is marked."""
    rows = [
        {"symbol": pair.symbol, "model": pair.model, "seq_len": pair.seq_len, **pair.metrics.to_dict()}
        for pair in pairs
        if pair.succeeded
    ]
    best = {}
    for index, row in enumerate(rows):
        key = (row["symbol"], row["model"])
        if key not in best or row["mse"] < rows[best[key]]["mse"]:
            best[key] = index
    for index, row in enumerate(rows):
        row["is_best"] = index in best.values()
    return rows


def run_sweep(config: ExperimentConfig) -> RunManifest:
    """Trains every (symbol, model, seq_len) combination and tabulates the held-out metrics."""
    if not config.sweep:
        raise ValueError("The sweep list is empty")
    started = time.perf_counter()
    tasks = [
        (source.symbol, kind, seq_len)
        for source in config.symbols
        for kind in config.models
        for seq_len in config.sweep
    ]
    logger.info(f"Sweeping {len(tasks)} combination(s) with {config.workers} worker(s)")

    pairs = _map_pairs(
        config, tasks, lambda table, symbol, kind, seq_len: sweep_pair(config, symbol, table, kind, seq_len)
    )
    rows = sweep_rows(pairs)
    best = {}
    for row in rows:
        if row["is_best"]:
            best.setdefault(row["symbol"], {})[row["model"]] = row["seq_len"]

    out = Path(config.out)
    written = [
        report.write_sweep_table(rows, out / "sweep_table.csv"),
        report.write_json(best, out / "best_seq_len.json"),
    ]
    return _write_manifest(config, "sweep", pairs, _relative(out, written), started)


def load_trained_model(config: ExperimentConfig, directory, params, data) -> TrainedModel:
    """Rebuilds a trained model from its checkpointed parameters and the loss curve stored beside them."""
    losses = report.read_loss_curve(Path(directory) / "loss_curve.csv")
    kind = params.kind
    train_config = config.train_config(kind).set(seq_len=params.seq_len, epochs=len(losses))
    return TrainedModel(
        params=params,
        config=train_config,
        loss_curve=[
            EpochLoss(epoch=int(row.epoch), train_loss=row.train_loss, test_loss=row.test_loss)
            for row in losses.itertuples()
        ],
        scaler=data.scaler,
        target_column=data.train.target_column,
    )


def explain_pair(config: ExperimentConfig, symbol: str, table: FeatureTable, kind: ModelKind) -> PairResult:
    started = time.perf_counter()
    directory = pair_directory(config.out, symbol, kind)
    try:
        params = load_checkpoint(directory / CHECKPOINT_FILE)
        data = prepare(table, WindowSpec(seq_len=params.seq_len), train_fraction=config.train_fraction)
        model = load_trained_model(config, directory, params, data)
        shap, lime, summary = _explanations(config, data, model)
    except Exception as error:
        return _failure(symbol, kind, None, error, started)

    written = [
        report.write_shap_global(summary, directory / "shap_global.csv"),
        report.write_local_explanation(shap, directory / "local_explanation_shap.csv"),
        report.write_local_explanation(lime, directory / "local_explanation_lime.csv"),
    ]
    top = ", ".join(f"{name} {score:+.4g}" for name, score in shap.ranked()[:3])
    logger.info(f"{symbol}/{kind.value} on {shap.target_date}: {top}")
    return PairResult(
        symbol=symbol,
        model=kind.value,
        seq_len=params.seq_len,
        status="ok",
        files=_relative(config.out, written),
        seconds=time.perf_counter() - started,
    )


def explain_experiment(config: ExperimentConfig) -> RunManifest:
    """Recomputes the attribution artifacts of every pair from the checkpoints of an earlier run.

    A pair without a checkpoint fails on its own. The outcome of every pair goes to ``explain_manifest.json``
    beside the manifest of the run.
    """
    started = time.perf_counter()
    tasks = [(source.symbol, kind) for source in config.symbols for kind in config.models]
    pairs = _map_pairs(config, tasks, lambda table, symbol, kind: explain_pair(config, symbol, table, kind))
    files = [name for pair in pairs for name in pair.files]
    return _write_manifest(config, "explain", pairs, files, started, EXPLAIN_MANIFEST_FILE)


__all__ = [
    "PairResult",
    "RunManifest",
    "explain_experiment",
    "explain_pair",
    "load_feature_table",
    "load_trained_model",
    "run_experiment",
    "run_pair",
    "run_sweep",
    "sweep_rows",
]
