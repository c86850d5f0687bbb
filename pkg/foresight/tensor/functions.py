from __future__ import annotations

import builtins

import numpy as np

from foresight.tensor import vectorized_functions
from foresight.tensor.core import ShapeError, Tensor, asarray, wrap_as_instruction


def _check_broadcastable(*arrays):
    try:
        np.broadcast_shapes(*(array.shape for array in arrays))
    except ValueError:
        shapes = ", ".join(str(array.shape) for array in arrays)
        raise ShapeError(f"Shapes are not broadcastable: {shapes}") from None


# Binary


@wrap_as_instruction()
def add(input_a, input_b):
    _check_broadcastable(input_a, input_b)
    return input_a + input_b


@wrap_as_instruction()
def subtract(input_a, input_b):
    _check_broadcastable(input_a, input_b)
    return input_a - input_b


@wrap_as_instruction()
def multiply(input_a, input_b):
    _check_broadcastable(input_a, input_b)
    return input_a * input_b


@wrap_as_instruction()
def divide(input_a, input_b):
    _check_broadcastable(input_a, input_b)
    return input_a / input_b


@wrap_as_instruction()
def matmul(input_a, input_b):
    if input_a.ndim < 2 or input_b.ndim < 2:
        raise ShapeError(f"matmul expects operands of rank >= 2, got {input_a.shape} and {input_b.shape}")
    if input_a.shape[-1] != input_b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {input_a.shape} @ {input_b.shape}")
    return input_a @ input_b


# Unary


@wrap_as_instruction()
def relu(input_tensor):
    return np.maximum(input_tensor, 0)


@wrap_as_instruction()
def tanh(input_tensor):
    return np.tanh(input_tensor)


@wrap_as_instruction()
def sigmoid(input_tensor):
    return vectorized_functions.sigmoid(input_tensor)


@wrap_as_instruction()
def gelu(input_tensor):
    return vectorized_functions.gelu(input_tensor)


@wrap_as_instruction()
def exp(input_tensor):
    return np.exp(input_tensor)


@wrap_as_instruction()
def log(input_tensor):
    return np.log(input_tensor)


@wrap_as_instruction()
def sqrt(input_tensor):
    return np.sqrt(input_tensor)


def square(input_tensor):
    return multiply(input_tensor, input_tensor)


def negative(input_tensor):
    return multiply(input_tensor, -1.0)


# Data Movement


@wrap_as_instruction(name="transpose")
def _transpose(input_tensor, *, axes):
    return np.transpose(input_tensor, axes)


def transpose(input_tensor, axes=None):
    input_tensor = asarray(input_tensor)
    if axes is None:
        axes = tuple(reversed(range(input_tensor.rank)))
    return _transpose(input_tensor, axes=tuple(axes))


@wrap_as_instruction(name="reshape")
def _reshape(input_tensor, *, shape):
    return np.reshape(input_tensor, shape)


def reshape(input_tensor, shape):
    return _reshape(input_tensor, shape=tuple(shape))


@wrap_as_instruction(name="broadcast_to")
def _broadcast_to(input_tensor, *, shape):
    try:
        return np.broadcast_to(input_tensor, shape).copy()
    except ValueError:
        raise ShapeError(f"Cannot broadcast {input_tensor.shape} to {shape}") from None


def broadcast_to(input_tensor, shape):
    return _broadcast_to(input_tensor, shape=tuple(shape))


@wrap_as_instruction(name="get_item")
def _get_item(input_tensor, *, indices):
    return np.array(input_tensor[indices])


def get_item(input_tensor, indices):
    if not isinstance(indices, tuple):
        indices = (indices,)
    for index in indices:
        if not isinstance(index, (int, builtins.slice, type(Ellipsis))):
            raise TypeError(f"Unsupported index type: {type(index)}")
    return _get_item(input_tensor, indices=indices)


@wrap_as_instruction(name="concatenate")
def _concatenate(*input_tensors, axis):
    ranks = {input_tensor.ndim for input_tensor in input_tensors}
    if len(ranks) != 1:
        raise ShapeError(f"concatenate expects operands of equal rank, got {[a.shape for a in input_tensors]}")
    return np.concatenate(input_tensors, axis=axis)


def concatenate(input_tensors, axis=0):
    return _concatenate(*input_tensors, axis=axis)


# Reduce


@wrap_as_instruction(name="sum")
def _sum(input_tensor, *, axis, keepdims):
    return np.sum(input_tensor, axis=axis, keepdims=keepdims)


def sum(input_tensor, axis=None, keepdims=False):
    return _sum(input_tensor, axis=axis, keepdims=keepdims)


@wrap_as_instruction(name="mean")
def _mean(input_tensor, *, axis, keepdims):
    return np.mean(input_tensor, axis=axis, keepdims=keepdims)


def mean(input_tensor, axis=None, keepdims=False):
    return _mean(input_tensor, axis=axis, keepdims=keepdims)


# Normalization


@wrap_as_instruction(name="softmax")
def _softmax(input_tensor, *, axis):
    return vectorized_functions.softmax(input_tensor, axis)


def softmax(input_tensor, axis=-1):
    return _softmax(input_tensor, axis=axis)


@wrap_as_instruction(name="layer_norm")
def _layer_norm(input_tensor, *, axis, epsilon):
    normalized, _ = vectorized_functions.normalize(input_tensor, axis, epsilon)
    return normalized


def layer_norm(input_tensor, axis=-1, epsilon=1e-5):
    """Normalizes along ``axis`` to zero mean and unit variance, without an affine transform."""
    return _layer_norm(input_tensor, axis=axis, epsilon=epsilon)


# Masking


@wrap_as_instruction(name="masked_fill")
def _masked_fill(input_tensor, *, mask, value):
    return np.where(mask, value, input_tensor)


def masked_fill(input_tensor, mask, value=-np.inf):
    mask = np.asarray(mask, dtype=bool)
    input_tensor = asarray(input_tensor)
    try:
        np.broadcast_shapes(mask.shape, input_tensor.shape)
    except ValueError:
        raise ShapeError(f"Mask of shape {mask.shape} does not broadcast to {input_tensor.shape}") from None
    return _masked_fill(input_tensor, mask=mask, value=float(value))


@wrap_as_instruction(name="dropout")
def _dropout(input_tensor, *, rate, seed):
    return input_tensor * vectorized_functions.dropout_mask(input_tensor.shape, rate, seed)


def dropout(input_tensor, rate, seed, train):
    """Inverted dropout: zeroes with probability ``rate`` and scales survivors by ``1 / (1 - rate)``.

    Identity when ``train`` is false or ``rate`` is 0.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    input_tensor = asarray(input_tensor)
    if not train or rate == 0.0:
        return input_tensor
    return _dropout(input_tensor, rate=float(rate), seed=int(seed))


Tensor.__add__ = lambda self, other: add(self, other)
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = lambda self, other: subtract(self, other)
Tensor.__rsub__ = lambda self, other: subtract(other, self)
Tensor.__mul__ = lambda self, other: multiply(self, other)
Tensor.__rmul__ = lambda self, other: multiply(other, self)
Tensor.__truediv__ = lambda self, other: divide(self, other)
Tensor.__rtruediv__ = lambda self, other: divide(other, self)
Tensor.__matmul__ = lambda self, other: matmul(self, other)
Tensor.__neg__ = lambda self: negative(self)
Tensor.__getitem__ = lambda self, indices: get_item(self, indices)


__all__ = [
    "add",
    "subtract",
    "multiply",
    "divide",
    "matmul",
    "relu",
    "tanh",
    "sigmoid",
    "gelu",
    "exp",
    "log",
    "sqrt",
    "square",
    "negative",
    "transpose",
    "reshape",
    "broadcast_to",
    "get_item",
    "concatenate",
    "sum",
    "mean",
    "softmax",
    "layer_norm",
    "masked_fill",
    "dropout",
]
