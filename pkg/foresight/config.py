"""Experiment configuration: a JSON document loaded into immutable records.

Relative data paths and the output directory are resolved against the directory of the config file.
"""
from __future__ import annotations

import json
from pathlib import Path

from pyrsistent import (
    InvariantException,
    PClass,
    PMap,
    PTypeError,
    PVector,
    field,
    freeze,
    pmap,
    pvector,
    pvector_field,
    thaw,
)

from foresight.models import ModelKind, default_hyper
from foresight.pipeline import DEFAULT_SEQUENCE_LENGTHS, DEFAULT_TRAIN_FRACTION
from foresight.trainer import DEFAULT_SEED, TrainConfig, default_config


class ConfigError(ValueError):
    ...


class SymbolSource(PClass):
    symbol = field(type=str, mandatory=True)
    path = field(type=str, mandatory=True)


class ExplainSettings(PClass):
    n_samples = field(type=(int, type(None)), initial=None)
    lime_n_perturb = field(type=int, initial=5000)
    lime_top_k = field(type=int, initial=10)
    global_limit = field(type=(int, type(None)), initial=None)

    def __invariant__(self):
        return (
            (self.lime_n_perturb >= 2, "lime_n_perturb must be at least 2"),
            (self.lime_top_k >= 1, "lime_top_k must be positive"),
            (self.global_limit is None or self.global_limit >= 1, "global_limit must be positive"),
        )


def _kinds(values):
    return pvector(value if isinstance(value, ModelKind) else ModelKind.parse(value) for value in values)


class ExperimentConfig(PClass):
    symbols = pvector_field(SymbolSource)
    models = field(type=PVector, initial=pvector(), factory=_kinds)
    train_overrides = field(type=PMap, initial=pmap(), factory=freeze)
    hyper_overrides = field(type=PMap, initial=pmap(), factory=freeze)
    sweep = pvector_field(int)
    out = field(type=str, initial="results")
    seq_len = field(type=(int, type(None)), initial=None)
    seed = field(type=int, initial=DEFAULT_SEED)
    workers = field(type=int, initial=1)
    plots = field(type=bool, initial=False)
    train_fraction = field(type=float, initial=DEFAULT_TRAIN_FRACTION, factory=float)
    explain = field(type=ExplainSettings, initial=ExplainSettings())

    def __invariant__(self):
        symbols = [source.symbol for source in self.symbols]
        return (
            (len(symbols) >= 1, "at least one symbol is required"),
            (len(set(symbols)) == len(symbols), "symbols must be unique"),
            (len(self.models) >= 1, "at least one model is required"),
            (all(seq_len >= 1 for seq_len in self.sweep), "sweep sequence lengths must be positive"),
            (self.workers >= 1, "workers must be positive"),
            (self.seq_len is None or self.seq_len >= 1, "seq_len must be positive"),
            (0.0 < self.train_fraction < 1.0, "train_fraction must lie in (0, 1)"),
        )

    def train_config(self, kind: ModelKind, seq_len=None) -> TrainConfig:
        """Table defaults for ``kind`` patched with the file's overrides, the experiment seed and ``seq_len``."""
        overrides = dict(thaw(self.train_overrides.get(kind.value, pmap())))
        overrides["seed"] = self.seed
        seq_len = self.seq_len if seq_len is None else seq_len
        if seq_len is not None:
            overrides["seq_len"] = seq_len
        return default_config(kind, **overrides)

    def hyper(self, kind: ModelKind) -> dict:
        return dict(thaw(self.hyper_overrides.get(kind.value, pmap())))

    def to_dict(self) -> dict:
        return {
            "symbols": [{"symbol": source.symbol, "path": source.path} for source in self.symbols],
            "models": [kind.value for kind in self.models],
            "train_overrides": thaw(self.train_overrides),
            "hyper_overrides": thaw(self.hyper_overrides),
            "sweep": list(self.sweep),
            "seq_len": self.seq_len,
            "out": self.out,
            "seed": self.seed,
            "workers": self.workers,
            "plots": self.plots,
            "train_fraction": self.train_fraction,
            "explain": self.explain.serialize(),
        }


TRAIN_OVERRIDE_KEYS = frozenset(TrainConfig._pclass_fields) - {"seed"}


def _check_keys(where, record, allowed):
    unknown = sorted(set(record) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key(s) {', '.join(unknown)} in {where}")


def _per_model(where, record, check):
    if not isinstance(record, dict):
        raise ConfigError(f"{where} must map model kinds to objects")
    patched = {}
    for name, overrides in record.items():
        try:
            kind = ModelKind.parse(name)
        except ValueError as error:
            raise ConfigError(f"{where}: {error}") from None
        if not isinstance(overrides, dict):
            raise ConfigError(f"{where}.{name} must be an object")
        check(kind, overrides)
        patched[kind.value] = overrides
    return patched


def _check_train_overrides(kind, overrides):
    _check_keys(f"train_overrides.{kind.value}", overrides, TRAIN_OVERRIDE_KEYS)
    try:
        default_config(kind, **overrides)
    except (InvariantException, PTypeError) as error:
        raise ConfigError(f"train_overrides.{kind.value}: {error}") from None


def _check_hyper_overrides(kind, overrides):
    try:
        default_hyper(kind, overrides)
    except (TypeError, ValueError) as error:
        raise ConfigError(f"hyper_overrides.{kind.value}: {error}") from None


def parse_experiment_config(record: dict, base_dir=".") -> ExperimentConfig:
    """Builds an ``ExperimentConfig`` from a decoded JSON object, rejecting unknown or malformed keys."""
    if not isinstance(record, dict):
        raise ConfigError("Experiment config must be a JSON object")
    _check_keys("experiment config", record, ExperimentConfig._pclass_fields)
    base_dir = Path(base_dir)

    symbols = []
    for entry in record.get("symbols", []):
        if not isinstance(entry, dict):
            raise ConfigError(f"Symbol entries must be objects, got {entry!r}")
        _check_keys("symbols entry", entry, SymbolSource._pclass_fields)
        if "symbol" not in entry or "path" not in entry:
            raise ConfigError(f"Symbol entry {entry!r} needs both 'symbol' and 'path'")
        symbols.append(SymbolSource(symbol=entry["symbol"], path=str(base_dir / entry["path"])))

    explain = record.get("explain", {})
    if not isinstance(explain, dict):
        raise ConfigError("explain must be an object")
    _check_keys("explain", explain, ExplainSettings._pclass_fields)

    values = {key: value for key, value in record.items() if key not in ("symbols", "explain")}
    values["symbols"] = symbols
    values["sweep"] = list(record.get("sweep", DEFAULT_SEQUENCE_LENGTHS))
    values["out"] = str(base_dir / record.get("out", "results"))
    values["train_overrides"] = _per_model("train_overrides", record.get("train_overrides", {}), _check_train_overrides)
    values["hyper_overrides"] = _per_model("hyper_overrides", record.get("hyper_overrides", {}), _check_hyper_overrides)
    try:
        return ExperimentConfig(explain=ExplainSettings(**explain), **values)
    except (InvariantException, PTypeError, ValueError) as error:
        raise ConfigError(f"Invalid experiment config: {error}") from None


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path}: not valid JSON ({error})") from None
    return parse_experiment_config(record, base_dir=path.parent)


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExplainSettings",
    "SymbolSource",
    "load_experiment_config",
    "parse_experiment_config",
]
