from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar

import numpy as np
from pyrsistent import immutable
from toolz import memoize

# scoped to the current thread or task
RECORD: ContextVar[bool] = ContextVar("record", default=True)

DTYPE = np.float64


class ShapeError(ValueError):
    ...


class Tensor:
    """Dense float64 array that remembers the instruction and operands that produced it.

    Leaves (parameters and inputs) have no instruction. ``grad`` is filled in by ``backward`` on
    leaves that require gradients.
    """

    __slots__ = ("data", "requires_grad", "grad", "instruction", "operands", "name")

    # numpy defers to the reflected operators below instead of broadcasting over the object
    __array_ufunc__ = None

    def __init__(self, data, *, requires_grad=False, instruction=None, operands=(), name=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad = None
        self.instruction = instruction
        self.operands = tuple(operands)
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self.instruction is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def backward(self):
        from foresight.tensor.differentiate import backward

        return backward(self)

    def __repr__(self):
        name = f"{self.name}, " if self.name is not None else ""
        return f"Tensor({name}shape={self.shape}, requires_grad={self.requires_grad})"


def parameter(array, *, name=None) -> Tensor:
    return Tensor(np.array(array, dtype=DTYPE), requires_grad=True, name=name)


def constant(array, *, name=None) -> Tensor:
    return Tensor(array, requires_grad=False, name=name)


def asarray(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return constant(value)


@contextmanager
def no_grad():
    token = RECORD.set(False)
    try:
        yield
    finally:
        RECORD.reset(token)


def is_recording() -> bool:
    return RECORD.get()


def create_from_instruction(*operands, instruction) -> Tensor:
    operands = tuple(asarray(operand) for operand in operands)
    output = instruction(*(operand.data for operand in operands))

    requires_grad = RECORD.get() and any(operand.requires_grad for operand in operands)
    if not requires_grad:
        return Tensor(output)
    return Tensor(output, requires_grad=True, instruction=instruction, operands=operands)


@memoize
def instruction_class(function_name, attributes):
    klass = immutable(list(attributes), name=function_name)
    return klass


def wrap_as_instruction(name=None):
    def outer_wrapper(compute_function):
        instruction_name = name or compute_function.__name__

        def call(self, *input_arrays):
            return compute_function(*input_arrays, **self._asdict())

        def wrapper(*operands, **klass_kwargs):
            klass = instruction_class(instruction_name, tuple(klass_kwargs.keys()))
            if klass.__call__ is not call:
                klass.__call__ = call
            instruction = klass(**klass_kwargs)
            return create_from_instruction(*operands, instruction=instruction)

        wrapper.__name__ = compute_function.__name__
        wrapper.__doc__ = compute_function.__doc__
        return wrapper

    return outer_wrapper


__all__ = [
    "DTYPE",
    "ShapeError",
    "Tensor",
    "asarray",
    "constant",
    "create_from_instruction",
    "is_recording",
    "no_grad",
    "parameter",
    "wrap_as_instruction",
]
