# ruff: noqa: F401
from .core import DTYPE, ShapeError, Tensor, asarray, constant, no_grad, parameter, wrap_as_instruction
from .functions import *

from .differentiate import backward, visualize
from .grad_check import grad_check
from . import layers
