"""JSON checkpoints of ModelParams.

Floats are written with their shortest round-trip representation, so loading a checkpoint gives back
bitwise-identical parameter arrays.
"""
import json
import pathlib

import numpy as np
from pyrsistent import pmap

from foresight.models.core import ModelKind, ModelParams

CHECKPOINT_FORMAT = "foresight-checkpoint"
CHECKPOINT_VERSION = 1


def params_to_dict(params: ModelParams) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": params.kind.value,
        "seq_len": params.seq_len,
        "n_features": params.n_features,
        "seed": params.seed,
        "hyper": dict(sorted(params.hyper.items())),
        "parameters": {
            name: {"shape": list(array.shape), "data": array.ravel().tolist()}
            for name, array in sorted(params.parameters.items())
        },
    }


def params_from_dict(record: dict) -> ModelParams:
    if record.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"Not a checkpoint record: format is {record.get('format')!r}")
    if record.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"Unsupported checkpoint version {record.get('version')!r}")

    parameters = {}
    for name, entry in record["parameters"].items():
        data = np.array(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"Parameter {name} has {data.size} values but shape {shape}")
        parameters[name] = data.reshape(shape)

    return ModelParams(
        kind=ModelKind(record["kind"]),
        seq_len=int(record["seq_len"]),
        n_features=int(record["n_features"]),
        seed=int(record["seed"]),
        hyper=pmap({name: int(value) for name, value in record["hyper"].items()}),
        parameters=pmap(parameters),
    )


def save_checkpoint(params: ModelParams, path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(params_to_dict(params), f)
    return path


def load_checkpoint(path) -> ModelParams:
    with pathlib.Path(path).open() as f:
        return params_from_dict(json.load(f))


__all__ = ["load_checkpoint", "params_from_dict", "params_to_dict", "save_checkpoint"]
