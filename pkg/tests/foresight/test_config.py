import json

import pytest

from foresight.config import ConfigError, load_experiment_config, parse_experiment_config
from foresight.models import ModelKind
from foresight.pipeline import DEFAULT_SEQUENCE_LENGTHS

MINIMAL = {"symbols": [{"symbol": "ACME", "path": "acme.csv"}], "models": ["dlinear"]}


def write_config(tmp_path, record):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(record), encoding="utf-8")
    return path


def test_minimal_config_gets_defaults(tmp_path):
    config = load_experiment_config(write_config(tmp_path, MINIMAL))
    assert list(config.models) == [ModelKind.DLINEAR]
    assert config.symbols[0].path == str(tmp_path / "acme.csv")
    assert config.out == str(tmp_path / "results")
    assert tuple(config.sweep) == DEFAULT_SEQUENCE_LENGTHS
    assert (config.seed, config.workers, config.plots, config.seq_len) == (42, 1, False, None)
    assert config.explain.lime_top_k == 10


def test_train_config_applies_overrides_and_seed():
    record = {**MINIMAL, "seed": 7, "train_overrides": {"DLinear": {"epochs": 3, "learning_rate": 0.01}}}
    config = parse_experiment_config(record)
    train_config = config.train_config(ModelKind.DLINEAR)
    assert (train_config.epochs, train_config.learning_rate, train_config.seed) == (3, 0.01, 7)
    assert train_config.batch_size == 32
    assert config.train_config(ModelKind.DLINEAR, seq_len=30).seq_len == 30
    assert config.set(seq_len=60).train_config(ModelKind.DLINEAR).seq_len == 60


def test_hyper_overrides_are_keyed_by_kind():
    config = parse_experiment_config({**MINIMAL, "hyper_overrides": {"tst": {"d_model": 16}}})
    assert config.hyper(ModelKind.TST) == {"d_model": 16}
    assert config.hyper(ModelKind.DLINEAR) == {}


@pytest.mark.parametrize(
    "record",
    [
        {**MINIMAL, "epochs": 10},
        {**MINIMAL, "symbols": [{"symbol": "ACME", "path": "acme.csv", "exchange": "BIST"}]},
        {**MINIMAL, "explain": {"n_samples": 100, "method": "lime"}},
        {**MINIMAL, "train_overrides": {"dlinear": {"momentum": 0.9}}},
        {**MINIMAL, "train_overrides": {"dlinear": {"seed": 1}}},
        {**MINIMAL, "hyper_overrides": {"dlinear": {"d_model": 16}}},
        {**MINIMAL, "train_overrides": {"prophet": {"epochs": 1}}},
    ],
)
def test_unknown_keys_are_rejected(record):
    with pytest.raises(ConfigError):
        parse_experiment_config(record)


@pytest.mark.parametrize(
    "record",
    [
        {"models": ["dlinear"]},
        {"symbols": MINIMAL["symbols"]},
        {**MINIMAL, "models": ["prophet"]},
        {**MINIMAL, "workers": 0},
        {**MINIMAL, "sweep": [5, 0]},
        {**MINIMAL, "train_fraction": 1.0},
        {**MINIMAL, "train_overrides": {"dlinear": {"epochs": 0}}},
        {**MINIMAL, "symbols": MINIMAL["symbols"] * 2},
        {**MINIMAL, "explain": {"lime_top_k": 0}},
    ],
)
def test_invalid_values_are_rejected(record):
    with pytest.raises(ConfigError):
        parse_experiment_config(record)


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{symbols: ", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_experiment_config(path)


def test_to_dict_echoes_the_config(tmp_path):
    record = {**MINIMAL, "models": ["tst", "lstnet"], "train_overrides": {"tst": {"epochs": 2}}, "sweep": [5, 10]}
    config = load_experiment_config(write_config(tmp_path, record))
    echoed = config.to_dict()
    assert echoed["models"] == ["TST", "LSTNet"]
    assert echoed["train_overrides"] == {"TST": {"epochs": 2}}
    assert echoed["sweep"] == [5, 10]
    assert parse_experiment_config(echoed).to_dict() == echoed
