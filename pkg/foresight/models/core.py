from __future__ import annotations

import enum

import numpy as np
from pyrsistent import PClass, field, pmap, pmap_field

from foresight.random import generator
from foresight.tensor import ShapeError


class ModelKind(enum.Enum):
    DLINEAR = "DLinear"
    LSTNET = "LSTNet"
    VANILLA_TRANSFORMER = "VanillaTransformer"
    TST = "TST"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        normalized = name.replace("_", "").replace("-", "").lower()
        for kind in cls:
            if normalized in (kind.value.lower(), kind.name.replace("_", "").lower()):
                return kind
        if normalized in ("vanilla", "transformer"):
            return cls.VANILLA_TRANSFORMER
        valid = ", ".join(kind.value for kind in cls)
        raise ValueError(f"Unknown model kind '{name}' (expected one of {valid})")


DEFAULT_HYPER = {
    ModelKind.DLINEAR: {"kernel_size": 25},
    ModelKind.LSTNET: {
        "filters": 16,
        "kernel_width": 3,
        "hidden_size": 32,
        "skip": 2,
        "skip_hidden_size": 32,
        "ar_window": 5,
    },
    ModelKind.VANILLA_TRANSFORMER: {"d_model": 32, "num_heads": 4, "num_layers": 2, "ff_size": 64},
    ModelKind.TST: {"d_model": 32, "num_heads": 4, "num_layers": 2, "ff_size": 64},
}


class ModelParams(PClass):
    """Architecture, shape, seed and the raw parameter arrays of one forecasting model."""

    kind = field(type=ModelKind, mandatory=True)
    seq_len = field(type=int, mandatory=True)
    n_features = field(type=int, mandatory=True)
    seed = field(type=int, mandatory=True)
    hyper = pmap_field(str, int)
    parameters = pmap_field(str, np.ndarray)

    @property
    def num_parameters(self) -> int:
        return sum(array.size for array in self.parameters.values())

    def with_parameters(self, parameters) -> "ModelParams":
        return self.set(parameters=pmap({name: np.asarray(array) for name, array in parameters.items()}))


class ForwardContext(PClass):
    """Train/eval switch plus what dropout needs to draw its masks."""

    train = field(type=bool, initial=False)
    dropout = field(type=float, initial=0.0, factory=float)
    seed = field(type=int, initial=0)
    step = field(type=int, initial=0)

    def dropout_seed(self, layer_id: str) -> int:
        return int(generator(self.seed, "dropout", layer_id, self.step).integers(2**63))


EVAL = ForwardContext()


def glorot_uniform(fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))

    def initialize(rng, shape):
        return rng.uniform(-limit, limit, size=shape)

    return initialize


def zeros(rng, shape):
    return np.zeros(shape)


def ones(rng, shape):
    return np.ones(shape)


def initialize_parameters(parameter_specs, seed) -> dict[str, np.ndarray]:
    """``parameter_specs`` maps a name to ``(shape, initializer)``; each name draws from its own stream."""
    return {
        name: np.asarray(initializer(generator(seed, "init", name), shape), dtype=np.float64)
        for name, (shape, initializer) in parameter_specs.items()
    }


def check_windows(windows, seq_len, n_features):
    if windows.rank != 3 or windows.shape[1:] != (seq_len, n_features):
        raise ShapeError(f"Expected windows of shape (batch, {seq_len}, {n_features}), got {windows.shape}")


__all__ = [
    "DEFAULT_HYPER",
    "EVAL",
    "ForwardContext",
    "ModelKind",
    "ModelParams",
    "check_windows",
    "glorot_uniform",
    "initialize_parameters",
    "ones",
    "zeros",
]
