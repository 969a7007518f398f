from . import ops
from .checkpoint import (CheckpointError, load_checkpoint, load_into,
                         read_array, save_checkpoint, write_array)
from .gradcheck import grad_check
from .init import glorot_uniform, ones, orthogonal, rng_from_seed, spawn_rngs, zeros
from .optim import Adam, AdamState, MissingGradientError, adam_step
from .params import ParamSet, count_params
from .tensor import GradientError, ShapeError, Tensor, as_tensor

__all__ = [
    "ops", "Tensor", "as_tensor", "ShapeError", "GradientError",
    "ParamSet", "count_params",
    "Adam", "AdamState", "MissingGradientError", "adam_step",
    "grad_check",
    "glorot_uniform", "orthogonal", "zeros", "ones", "rng_from_seed", "spawn_rngs",
    "save_checkpoint", "load_checkpoint", "load_into", "CheckpointError",
    "write_array", "read_array",
]
