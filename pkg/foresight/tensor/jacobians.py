"""Backward rules, one per instruction, looked up by instruction class name as ``<name>_jacobian``.

Every rule has the signature ``(instruction, incoming_gradient, input_arrays, output_array)`` and
returns one outgoing gradient per operand, shaped like that operand.
"""
import sys

import numpy as np

from foresight.tensor.vectorized_functions import cdf, dropout_mask, pdf

THIS_MODULE = sys.modules[__name__]


def unbroadcast(gradient, shape):
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


def _swap_last_axes(array):
    return np.swapaxes(array, -1, -2)


def add_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    input_a, input_b = input_arrays
    return unbroadcast(incoming_gradient, input_a.shape), unbroadcast(incoming_gradient, input_b.shape)


def subtract_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    input_a, input_b = input_arrays
    return unbroadcast(incoming_gradient, input_a.shape), unbroadcast(-incoming_gradient, input_b.shape)


def multiply_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    input_a, input_b = input_arrays
    outgoing_gradient_a = unbroadcast(incoming_gradient * input_b, input_a.shape)
    outgoing_gradient_b = unbroadcast(incoming_gradient * input_a, input_b.shape)
    return outgoing_gradient_a, outgoing_gradient_b


def divide_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    input_a, input_b = input_arrays
    outgoing_gradient_a = unbroadcast(incoming_gradient / input_b, input_a.shape)
    outgoing_gradient_b = unbroadcast(-incoming_gradient * input_a / (input_b * input_b), input_b.shape)
    return outgoing_gradient_a, outgoing_gradient_b


def matmul_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    input_a, input_b = input_arrays
    outgoing_gradient_a = unbroadcast(incoming_gradient @ _swap_last_axes(input_b), input_a.shape)
    outgoing_gradient_b = unbroadcast(_swap_last_axes(input_a) @ incoming_gradient, input_b.shape)
    return outgoing_gradient_a, outgoing_gradient_b


def relu_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (incoming_gradient * (input_tensor > 0),)


def tanh_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    return (incoming_gradient * (1.0 - output_array * output_array),)


def sigmoid_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    return (incoming_gradient * output_array * (1.0 - output_array),)


def gelu_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (incoming_gradient * (cdf(input_tensor) + input_tensor * pdf(input_tensor)),)


def exp_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    return (incoming_gradient * output_array,)


def log_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (incoming_gradient / input_tensor,)


def sqrt_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    return (incoming_gradient / (2.0 * output_array),)


def transpose_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    rank = len(forward_instruction.axes)
    axes = [None] * rank
    for index, axis in enumerate(forward_instruction.axes):
        axes[axis] = index
    return (np.transpose(incoming_gradient, tuple(axes)),)


def reshape_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (np.reshape(incoming_gradient, input_tensor.shape),)


def broadcast_to_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (unbroadcast(incoming_gradient, input_tensor.shape),)


def get_item_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    outgoing_gradient = np.zeros_like(input_tensor)
    outgoing_gradient[forward_instruction.indices] += incoming_gradient
    return (outgoing_gradient,)


def concatenate_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    sizes = [input_tensor.shape[forward_instruction.axis] for input_tensor in input_arrays]
    split_points = np.cumsum(sizes)[:-1]
    return tuple(np.split(incoming_gradient, split_points, axis=forward_instruction.axis))


def _expand_reduced(incoming_gradient, forward_instruction, input_shape):
    if forward_instruction.keepdims or forward_instruction.axis is None:
        return np.broadcast_to(incoming_gradient, input_shape)
    axes = forward_instruction.axis
    if isinstance(axes, int):
        axes = (axes,)
    axes = sorted(axis % len(input_shape) for axis in axes)
    for axis in axes:
        incoming_gradient = np.expand_dims(incoming_gradient, axis)
    return np.broadcast_to(incoming_gradient, input_shape)


def sum_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    return (np.array(_expand_reduced(incoming_gradient, forward_instruction, input_tensor.shape)),)


def mean_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    num_elements = input_tensor.size // max(output_array.size, 1)
    outgoing_gradient = _expand_reduced(incoming_gradient, forward_instruction, input_tensor.shape) / num_elements
    return (outgoing_gradient,)


def softmax_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    axis = forward_instruction.axis
    weighted = np.sum(incoming_gradient * output_array, axis=axis, keepdims=True)
    return (output_array * (incoming_gradient - weighted),)


def layer_norm_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    axis = forward_instruction.axis
    centered = input_tensor - np.mean(input_tensor, axis=axis, keepdims=True)
    std = np.sqrt(np.mean(centered * centered, axis=axis, keepdims=True) + forward_instruction.epsilon)
    mean_gradient = np.mean(incoming_gradient, axis=axis, keepdims=True)
    mean_projection = np.mean(incoming_gradient * output_array, axis=axis, keepdims=True)
    return ((incoming_gradient - mean_gradient - output_array * mean_projection) / std,)


def masked_fill_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    (input_tensor,) = input_arrays
    outgoing_gradient = np.where(forward_instruction.mask, 0.0, incoming_gradient)
    return (unbroadcast(outgoing_gradient, input_tensor.shape),)


def dropout_jacobian(forward_instruction, incoming_gradient, input_arrays, output_array):
    mask = dropout_mask(incoming_gradient.shape, forward_instruction.rate, forward_instruction.seed)
    return (incoming_gradient * mask,)


__all__ = [attr for attr in THIS_MODULE.__dict__.keys() if attr.endswith("_jacobian")]
