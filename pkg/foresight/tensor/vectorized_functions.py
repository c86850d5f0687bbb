import numpy as np
from scipy import special

from foresight.random import generator


def erf(input_tensor: np.array) -> np.array:
    return special.erf(input_tensor)


def cdf(input_tensor: np.array) -> np.array:
    return (0.5 * (1 + erf(input_tensor / np.sqrt(2)))).astype(input_tensor.dtype)


def pdf(input_tensor: np.array) -> np.array:
    return (0.3989422804014327 * np.exp(input_tensor * input_tensor * -0.5)).astype(input_tensor.dtype)


def gelu(input_tensor: np.array) -> np.array:
    return input_tensor * cdf(input_tensor)


def sigmoid(input_tensor: np.array) -> np.array:
    return special.expit(input_tensor)


def softmax(input_tensor: np.array, axis: int) -> np.array:
    shifted = input_tensor - np.max(input_tensor, axis=axis, keepdims=True)
    exp_input_tensor = np.exp(shifted)
    return exp_input_tensor / np.sum(exp_input_tensor, axis=axis, keepdims=True)


def normalize(input_tensor: np.array, axis: int, epsilon: float) -> tuple[np.array, np.array]:
    mean = np.mean(input_tensor, axis=axis, keepdims=True)
    centered = input_tensor - mean
    var = np.mean(centered * centered, axis=axis, keepdims=True)
    std = np.sqrt(var + epsilon)
    return centered / std, std


def dropout_mask(shape: tuple, rate: float, seed: int) -> np.array:
    keep = generator(seed, "dropout_mask").random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)
