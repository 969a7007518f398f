"""Audio subnetwork.

Three residual squeeze-excitation blocks over the (64 bands, T frames,
3 channels) input, with time-axis max pooling and dropout between blocks,
global average pooling to a 128-feature vector and a softmax classifier.
The pre-pooling feature maps are part of the forward result because the
fusion network consumes them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..engine import ops
from ..engine.init import spawn_rngs
from ..engine.tensor import ShapeError, Tensor
from .blocks import ResidualSEBlock
from .layers import Dense, Module

N_BANDS = 64
N_INPUT_CHANNELS = 3


@dataclass
class AudioNetConfig:
    block_filters: tuple[int, ...] = (32, 64, 128)
    dropout_rate: float = 0.3
    n_classes: int = 10
    scse_reduction: int = 2
    scse_combine: str = "max"
    seed: int = 0

    def __post_init__(self):
        self.block_filters = tuple(self.block_filters)
        if self.block_filters[-1] != 128:
            raise ValueError("last block must emit 128 channels (fusion contract), "
                             f"got {self.block_filters[-1]}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.dropout_rate}")

    def to_dict(self) -> dict:
        return {"block_filters": list(self.block_filters),
                "dropout_rate": self.dropout_rate, "n_classes": self.n_classes,
                "scse_reduction": self.scse_reduction,
                "scse_combine": self.scse_combine, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "AudioNetConfig":
        return AudioNetConfig(**d)


@dataclass
class AudioForward:
    logits: Tensor
    probs: Tensor
    feature_maps: Tensor


class AudioNet(Module):
    def __init__(self, config: AudioNetConfig | None = None, dtype=np.float32):
        config = config or AudioNetConfig()
        rngs = spawn_rngs(config.seed, len(config.block_filters) + 1)
        self.blocks = []
        c_in = N_INPUT_CHANNELS
        for i, c_out in enumerate(config.block_filters):
            self.blocks.append(ResidualSEBlock(
                c_in, c_out, rngs[i], config.scse_reduction,
                config.scse_combine, dtype))
            c_in = c_out
        self.head = Dense(config.block_filters[-1], config.n_classes, rngs[-1], dtype)
        self.config = config
        self.dtype = dtype

    def forward(self, rep: Tensor, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> AudioForward:
        """``rep`` is (64, T, 3) or (N, 64, T, 3); T shrinks by 4x inside."""
        bands = rep.shape[-3]
        chans = rep.shape[-1]
        if bands != N_BANDS:
            raise ShapeError(f"audio input must have {N_BANDS} bands, got {bands}")
        if chans != N_INPUT_CHANNELS:
            raise ShapeError(f"audio input must have {N_INPUT_CHANNELS} channels, got {chans}")

        h = rep
        last = len(self.blocks) - 1
        for i, block in enumerate(self.blocks):
            h = block(h, training)
            if i < last:
                h = ops.max_pool(h, (1, 2))
                h = ops.dropout(h, self.config.dropout_rate, rng, training)
        feature_maps = h
        axes = (1, 2) if h.ndim == 4 else (0, 1)
        pooled = ops.global_avg_pool(h, axes)
        logits = self.head(pooled)
        probs = ops.softmax(logits, axis=-1)
        return AudioForward(logits=logits, probs=probs, feature_maps=feature_maps)

    def __call__(self, rep: Tensor, training: bool = False,
                 rng: Optional[np.random.Generator] = None) -> AudioForward:
        return self.forward(rep, training, rng)
