from __future__ import annotations

import numpy as np
from loguru import logger
from pyrsistent import PClass, field, pmap

import foresight.tensor as ft
from foresight.models import dlinear, lstnet, transformer
from foresight.models.core import DEFAULT_HYPER, EVAL, ForwardContext, ModelKind, ModelParams, check_windows
from foresight.models.core import initialize_parameters


class Architecture(PClass):
    resolve_hyper = field(mandatory=True)
    parameter_specs = field(mandatory=True)
    forward = field(mandatory=True)
    encode = field(initial=None)


kind_to_architecture = {
    ModelKind.DLINEAR: Architecture(
        resolve_hyper=dlinear.resolve_hyper,
        parameter_specs=dlinear.parameter_specs,
        forward=dlinear.dlinear_forward,
    ),
    ModelKind.LSTNET: Architecture(
        resolve_hyper=lstnet.resolve_hyper,
        parameter_specs=lstnet.parameter_specs,
        forward=lstnet.lstnet_forward,
    ),
    ModelKind.VANILLA_TRANSFORMER: Architecture(
        resolve_hyper=transformer.resolve_hyper,
        parameter_specs=transformer.vanilla_parameter_specs,
        forward=transformer.vanilla_forward,
        encode=transformer.vanilla_encode,
    ),
    ModelKind.TST: Architecture(
        resolve_hyper=transformer.resolve_hyper,
        parameter_specs=transformer.tst_parameter_specs,
        forward=transformer.tst_forward,
        encode=transformer.tst_encode,
    ),
}


def default_hyper(kind: ModelKind, overrides=None) -> dict[str, int]:
    hyper = dict(DEFAULT_HYPER[kind])
    for name, value in (overrides or {}).items():
        if name not in hyper and name != "target_index":
            raise ValueError(f"Unknown hyper-parameter '{name}' for {kind.value}")
        hyper[name] = int(value)
    return hyper


def init_params(
    kind: ModelKind, seq_len: int, n_features: int, seed: int, *, hyper=None, target_index=0
) -> ModelParams:
    """Glorot-uniform weights, zero biases and unit norm gains, fully determined by ``seed``."""
    if seq_len < 1 or n_features < 1:
        raise ValueError(f"seq_len and n_features must be positive, got {seq_len} and {n_features}")

    architecture = kind_to_architecture[kind]
    resolved = architecture.resolve_hyper(
        {**default_hyper(kind, hyper), "target_index": target_index}, seq_len, n_features
    )
    parameters = initialize_parameters(architecture.parameter_specs(seq_len, n_features, resolved), seed)

    params = ModelParams(
        kind=kind,
        seq_len=seq_len,
        n_features=n_features,
        seed=seed,
        hyper=pmap(resolved),
        parameters=pmap(parameters),
    )
    logger.debug(f"Initialized {kind.value} with {params.num_parameters} parameters (L={seq_len}, C={n_features})")
    return params


def as_tensors(params: ModelParams, *, requires_grad=False) -> dict[str, ft.Tensor]:
    create = ft.parameter if requires_grad else ft.constant
    return {name: create(array, name=name) for name, array in params.parameters.items()}


def forward(params: ModelParams, windows, context: ForwardContext = EVAL, parameters=None) -> ft.Tensor:
    """Forecasts for a batch of windows ``(B, L, C)``, returned with shape ``(B,)``.

    ``parameters`` maps names to tensors (for example gradient-tracking ones during training);
    by default the arrays in ``params`` are used as constants.
    """
    windows = ft.asarray(windows)
    check_windows(windows, params.seq_len, params.n_features)
    if parameters is None:
        parameters = as_tensors(params)
    architecture = kind_to_architecture[params.kind]
    return architecture.forward(parameters, windows, dict(params.hyper), context)


def encode(params: ModelParams, windows, context: ForwardContext = EVAL) -> list[np.ndarray]:
    """Hidden states after every encoder block of a transformer model."""
    architecture = kind_to_architecture[params.kind]
    if architecture.encode is None:
        raise ValueError(f"{params.kind.value} has no encoder stack")
    windows = ft.asarray(windows)
    check_windows(windows, params.seq_len, params.n_features)
    with ft.no_grad():
        hidden_states = architecture.encode(as_tensors(params), windows, dict(params.hyper), context)
    return [state.numpy() for state in hidden_states]


def predict(params: ModelParams, windows, *, batch_size=256) -> np.ndarray:
    """Eval-mode forecasts without graph recording."""
    windows = np.asarray(windows, dtype=np.float64)
    if len(windows) == 0:
        return np.zeros(0)
    parameters = as_tensors(params)
    outputs = []
    with ft.no_grad():
        for start in range(0, len(windows), batch_size):
            outputs.append(forward(params, windows[start : start + batch_size], EVAL, parameters).numpy())
    return np.concatenate(outputs)


__all__ = [
    "Architecture",
    "as_tensors",
    "default_hyper",
    "encode",
    "forward",
    "init_params",
    "kind_to_architecture",
    "predict",
]
