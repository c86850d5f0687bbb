import numpy as np

from foresight.tensor.core import Tensor, no_grad
from foresight.tensor.differentiate import backward


def numerical_gradient(function, input_tensor: Tensor, epsilon=1e-5) -> np.ndarray:
    gradient = np.zeros_like(input_tensor.data)
    with no_grad():
        for index in np.ndindex(input_tensor.shape):
            original = input_tensor.data[index]
            input_tensor.data[index] = original + epsilon
            plus = function(input_tensor).item()
            input_tensor.data[index] = original - epsilon
            minus = function(input_tensor).item()
            input_tensor.data[index] = original
            gradient[index] = (plus - minus) / (2 * epsilon)
    return gradient


def analytic_gradient(function, input_tensor: Tensor) -> np.ndarray:
    input_tensor.zero_grad()
    output = function(input_tensor)
    (gradient,) = backward(output, inputs=[input_tensor]).values()
    gradient = gradient.copy()
    input_tensor.zero_grad()
    return gradient


def grad_check(function, input_tensor: Tensor, epsilon=1e-5) -> float:
    """Largest componentwise relative error between backward gradients and central differences.

    ``function`` maps ``input_tensor`` to a scalar tensor. The relative error of one component is
    ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    if not input_tensor.requires_grad:
        raise ValueError("grad_check needs a tensor that requires gradients")

    analytic = analytic_gradient(function, input_tensor)
    numeric = numerical_gradient(function, input_tensor, epsilon)
    relative_error = np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    if relative_error.size == 0:
        return 0.0
    return float(np.max(relative_error))


__all__ = ["analytic_gradient", "grad_check", "numerical_gradient"]
