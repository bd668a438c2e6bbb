"""Reverse-mode autodiff over dense numpy arrays.

Exactly the operation set the fusion network needs, recorded define-by-run
on a per-step tape. 64-bit precision for gradient checks, 32-bit for
training; see :func:`set_default_dtype`.
"""

from .autodiff import (
    Tape,
    Value,
    backward,
    get_default_dtype,
    set_default_dtype,
)
from . import ops
from .nn import MLP, Conv2d, Linear, Module, Parameter
from .optim import Adam
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "Adam",
    "CheckpointError",
    "Conv2d",
    "Linear",
    "MLP",
    "Module",
    "Parameter",
    "Tape",
    "Value",
    "backward",
    "get_default_dtype",
    "load_checkpoint",
    "ops",
    "save_checkpoint",
    "set_default_dtype",
]
