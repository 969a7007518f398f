"""Residual squeeze-excitation convolution blocks.

The block used throughout the audio subnetwork: two 3x3 convolutions with
batch normalization, a projection shortcut when the channel count changes,
ELU after the residual sum, then a concurrent spatial/channel
squeeze-excitation recalibration of the summed feature map.
"""
from __future__ import annotations

import numpy as np

from ..engine import ops
from ..engine.tensor import ShapeError, Tensor
from .layers import BatchNorm, Conv2D, Dense, Module


class SpatialChannelSE(Module):
    """Concurrent channel (cSE) and spatial (sSE) gating.

    The channel branch squeezes the map to per-channel means, passes them
    through a bottleneck MLP (reduction ``r``) and rescales channels; the
    spatial branch gates positions through a 1x1 convolution. The two
    recalibrated maps combine elementwise ("max" or "add").
    """

    def __init__(self, channels: int, rng: np.random.Generator,
                 reduction: int = 2, combine: str = "max", dtype=np.float32):
        if channels % reduction:
            raise ShapeError(f"scSE reduction {reduction} must divide channels {channels}")
        if combine not in ("max", "add"):
            raise ValueError(f"scSE combine must be 'max' or 'add', got {combine!r}")
        self.squeeze = Dense(channels, channels // reduction, rng, dtype)
        self.expand = Dense(channels // reduction, channels, rng, dtype)
        self.spatial = Conv2D(1, channels, 1, rng, dtype=dtype)
        self.combine = combine

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim == 4:
            pooled = ops.mean_axes(x, (1, 2))
            shape_c = (x.shape[0], 1, 1, x.shape[-1])
        else:
            pooled = ops.mean_axes(x, (0, 1))
            shape_c = (1, 1, x.shape[-1])
        gate_c = ops.sigmoid(self.expand(ops.relu(self.squeeze(pooled))))
        channel_branch = ops.mul(x, ops.reshape(gate_c, shape_c))
        gate_s = ops.sigmoid(self.spatial(x))
        spatial_branch = ops.mul(x, gate_s)
        if self.combine == "max":
            return ops.maximum(channel_branch, spatial_branch)
        return ops.add(channel_branch, spatial_branch)


class ResidualSEBlock(Module):
    """conv3x3 -> BN -> ELU -> conv3x3 -> BN, shortcut add, ELU, scSE."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 scse_reduction: int = 2, scse_combine: str = "max",
                 dtype=np.float32):
        self.conv1 = Conv2D(3, c_in, c_out, rng, dtype=dtype)
        self.bn1 = BatchNorm(c_out, dtype)
        self.conv2 = Conv2D(3, c_out, c_out, rng, dtype=dtype)
        self.bn2 = BatchNorm(c_out, dtype)
        if c_in != c_out:
            self.proj = Conv2D(1, c_in, c_out, rng, dtype=dtype)
            self.proj_bn = BatchNorm(c_out, dtype)
        else:
            self.proj = None
            self.proj_bn = None
        self.scse = SpatialChannelSE(c_out, rng, scse_reduction, scse_combine, dtype)

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        main = self.bn1(self.conv1(x), training)
        main = ops.elu(main)
        main = self.bn2(self.conv2(main), training)
        shortcut = x if self.proj is None else self.proj_bn(self.proj(x), training)
        summed = ops.elu(ops.add(main, shortcut))
        return self.scse(summed)
