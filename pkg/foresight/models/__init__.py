# ruff: noqa: F401
from .core import EVAL, ForwardContext, ModelKind, ModelParams
from .registry import as_tensors, default_hyper, encode, forward, init_params, predict
from .dlinear import series_decompose
from .transformer import sinusoidal_encoding
from .checkpoint import load_checkpoint, save_checkpoint
