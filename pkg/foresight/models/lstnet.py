"""Convolutional-recurrent forecaster with a skip-recurrent path and a linear autoregressive term."""
import numpy as np

import foresight.tensor as ft
from foresight.models.core import glorot_uniform, zeros
from foresight.tensor.layers import gru_cell


def resolve_hyper(hyper, seq_len, n_features):
    hyper = {**hyper, "ar_window": min(hyper["ar_window"], seq_len)}
    skip, kernel_width = hyper["skip"], hyper["kernel_width"]
    if kernel_width > seq_len:
        raise ValueError(f"Convolution width {kernel_width} exceeds seq_len {seq_len}")
    if skip >= seq_len:
        raise ValueError(f"Skip interval {skip} must be smaller than seq_len {seq_len}")
    if seq_len - kernel_width + 1 < skip:
        raise ValueError(
            f"Convolution output length {seq_len - kernel_width + 1} is shorter than one skip period of {skip}"
        )
    if not 0 <= hyper.get("target_index", 0) < n_features:
        raise ValueError(f"target_index {hyper.get('target_index')} is not a feature index below {n_features}")
    return hyper


def _gru_specs(prefix, input_size, hidden_size):
    return {
        f"{prefix}.input.weight": ((input_size, 3 * hidden_size), glorot_uniform(input_size, 3 * hidden_size)),
        f"{prefix}.hidden.weight": ((hidden_size, 3 * hidden_size), glorot_uniform(hidden_size, 3 * hidden_size)),
        f"{prefix}.bias": ((3 * hidden_size,), zeros),
    }


def parameter_specs(seq_len, n_features, hyper):
    filters, kernel_width = hyper["filters"], hyper["kernel_width"]
    hidden_size, skip_hidden_size = hyper["hidden_size"], hyper["skip_hidden_size"]
    dense_size = hidden_size + hyper["skip"] * skip_hidden_size
    ar_window = hyper["ar_window"]
    return {
        "conv.weight": ((kernel_width * n_features, filters), glorot_uniform(kernel_width * n_features, filters)),
        "conv.bias": ((filters,), zeros),
        **_gru_specs("gru", filters, hidden_size),
        **_gru_specs("skip_gru", filters, skip_hidden_size),
        "dense.weight": ((dense_size, 1), glorot_uniform(dense_size, 1)),
        "dense.bias": ((1,), zeros),
        "ar.weight": ((ar_window, 1), glorot_uniform(ar_window, 1)),
        "ar.bias": ((1,), zeros),
    }


def convolution(windows, weight, bias, *, kernel_width):
    """Valid 1-D convolution over time with every channel as input; returns ``(B, L - w + 1, F)``."""
    batch_size, seq_len, n_features = windows.shape
    patches = [
        ft.reshape(windows[:, start : start + kernel_width, :], (batch_size, 1, kernel_width * n_features))
        for start in range(seq_len - kernel_width + 1)
    ]
    return ft.relu(ft.concatenate(patches, axis=1) @ weight + bias)


def run_gru(sequence, parameters, prefix, hidden_size):
    batch_size = sequence[0].shape[0]
    hidden_state = ft.constant(np.zeros((batch_size, hidden_size)))
    for step in sequence:
        hidden_state = gru_cell(
            step,
            hidden_state,
            parameters[f"{prefix}.input.weight"],
            parameters[f"{prefix}.hidden.weight"],
            parameters[f"{prefix}.bias"],
        )
    return hidden_state


def lstnet_forward(parameters, windows, hyper, context):
    batch_size, seq_len, _ = windows.shape
    skip = hyper["skip"]

    convolved = convolution(
        windows, parameters["conv.weight"], parameters["conv.bias"], kernel_width=hyper["kernel_width"]
    )
    convolved = ft.dropout(convolved, context.dropout, context.dropout_seed("conv"), context.train)
    steps = [convolved[:, index, :] for index in range(convolved.shape[1])]

    hidden_state = run_gru(steps, parameters, "gru", hyper["hidden_size"])

    # one recurrent pass per phase over the steps spaced `skip` apart, aligned to end at the last step
    num_periods = len(steps) // skip
    offset = len(steps) - num_periods * skip
    skip_states = [
        run_gru(steps[offset + phase :: skip], parameters, "skip_gru", hyper["skip_hidden_size"])
        for phase in range(skip)
    ]

    combined = ft.concatenate([hidden_state, *skip_states], axis=-1)
    combined = ft.dropout(combined, context.dropout, context.dropout_seed("dense"), context.train)
    nonlinear = combined @ parameters["dense.weight"] + parameters["dense.bias"]

    ar_window, target_index = hyper["ar_window"], hyper.get("target_index", 0)
    recent = windows[:, seq_len - ar_window :, target_index]
    autoregressive = recent @ parameters["ar.weight"] + parameters["ar.bias"]

    return ft.reshape(nonlinear + autoregressive, (batch_size,))


__all__ = ["convolution", "lstnet_forward", "parameter_specs", "run_gru"]
