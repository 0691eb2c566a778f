"""Minimal dense tensors with reverse-mode differentiation."""

from . import nn, ops
from .core import Parameter, ShapeError, Tape, TapeError, Tensor, as_tensor, backward
from .optim import Adam, clip_grad_norm

__all__ = [
    "Tensor", "Parameter", "Tape", "TapeError", "ShapeError", "as_tensor", "backward",
    "Adam", "clip_grad_norm", "nn", "ops",
]
