"""Decomposition-linear forecaster.

Each input channel is split into a moving-average trend and a remainder; one linear head per channel
and component maps the window to a per-channel forecast, and a learned linear aggregation combines
the channels into the target forecast.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

import foresight.tensor as ft
from foresight.models.core import glorot_uniform, zeros


def resolve_kernel_size(kernel_size, seq_len) -> int:
    """Largest odd kernel that is at most ``kernel_size`` and at most ``2 * seq_len - 1``."""
    kernel_size = min(kernel_size, 2 * seq_len - 1)
    if kernel_size % 2 == 0:
        kernel_size -= 1
    return max(kernel_size, 1)


def _check_kernel(kernel_size, seq_len):
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"Decomposition kernel must be a positive odd integer, got {kernel_size}")
    if kernel_size > 2 * seq_len - 1:
        raise ValueError(f"Decomposition kernel {kernel_size} exceeds 2 * seq_len - 1 = {2 * seq_len - 1}")


def series_decompose(window, kernel_size):
    """Splits an ``(L, C)`` window into its moving-average trend and the remainder.

    The window is padded by replicating its first and last rows so that the trend keeps length L.
    """
    window = np.asarray(window, dtype=np.float64)
    seq_len = window.shape[-2]
    _check_kernel(kernel_size, seq_len)

    half = (kernel_size - 1) // 2
    padding = [(0, 0)] * window.ndim
    padding[-2] = (half, half)
    padded = np.pad(window, padding, mode="edge")
    trend = sliding_window_view(padded, kernel_size, axis=-2).mean(axis=-1)
    return trend, window - trend


def moving_average_matrix(seq_len, kernel_size) -> np.ndarray:
    """``A`` such that ``A @ window`` is the edge-replicated moving average of ``window``."""
    _check_kernel(kernel_size, seq_len)
    half = (kernel_size - 1) // 2
    matrix = np.zeros((seq_len, seq_len))
    for row in range(seq_len):
        for offset in range(-half, half + 1):
            matrix[row, min(max(row + offset, 0), seq_len - 1)] += 1.0 / kernel_size
    return matrix


def resolve_hyper(hyper, seq_len, n_features):
    return {**hyper, "kernel_size": resolve_kernel_size(hyper["kernel_size"], seq_len)}


def parameter_specs(seq_len, n_features, hyper):
    return {
        "trend.weight": ((n_features, seq_len), glorot_uniform(seq_len, 1)),
        "seasonal.weight": ((n_features, seq_len), glorot_uniform(seq_len, 1)),
        "channel.bias": ((n_features,), zeros),
        "aggregation.weight": ((n_features, 1), glorot_uniform(n_features, 1)),
        "aggregation.bias": ((1,), zeros),
    }


def dlinear_forward(parameters, windows, hyper, context):
    batch_size, seq_len, _ = windows.shape
    averaging = moving_average_matrix(seq_len, hyper["kernel_size"])

    trend = ft.constant(averaging) @ windows
    seasonal = windows - trend

    channel_forecast = ft.sum(ft.transpose(trend, (0, 2, 1)) * parameters["trend.weight"], axis=-1)
    channel_forecast = channel_forecast + ft.sum(
        ft.transpose(seasonal, (0, 2, 1)) * parameters["seasonal.weight"], axis=-1
    )
    channel_forecast = channel_forecast + parameters["channel.bias"]
    channel_forecast = ft.dropout(
        channel_forecast, context.dropout, context.dropout_seed("channels"), context.train
    )

    output = channel_forecast @ parameters["aggregation.weight"] + parameters["aggregation.bias"]
    return ft.reshape(output, (batch_size,))


__all__ = ["dlinear_forward", "moving_average_matrix", "parameter_specs", "resolve_kernel_size", "series_decompose"]
