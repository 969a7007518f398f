"""Visual subnetwork.

A frozen convolutional backbone applied per frame (time-distributed),
spatially averaged to one 512-vector per frame, a bidirectional GRU over
those vectors, a shared per-step softmax classifier, and a temporal
average of the step predictions.

Two backbones satisfy the same contract (512 output channels over any
(224, 224, 3) frame):

* ``VGG16Backbone``: the 13-convolution stack, weights loaded from a
  project checkpoint produced offline by the ingest tools; ~14.7M
  parameters, always frozen. Frames are normalized by BGR mean
  subtraction (see ``VGG16_BGR_MEANS``).
* ``TinyBackbone``: a trainable stand-in for desk-scale runs: four
  pool-then-conv stages (3x3 convs 3->16->32->64, final 1x1 projection to
  512), 56,864 parameters. The final stage is a 1x1 channel projection to
  keep CPU feature extraction cheap. Frames are [0, 1] scaled.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine import ops
from ..engine.checkpoint import CheckpointError, load_checkpoint, load_into
from ..engine.init import rng_from_seed, spawn_rngs
from ..engine.tensor import ShapeError, Tensor
from .layers import BiGRU, Conv2D, Dense, Module

FRAME_SIZE = 224
FRAMES_PER_SECOND = 5
BACKBONE_FEATURES = 512

# BGR channel means of the places365 training images, subtracted after
# RGB->BGR reordering; documented for the offline weight converter.
VGG16_BGR_MEANS = (104.051, 112.514, 116.676)

TINY_BACKBONE_PARAMS = 56_864
VGG16_BACKBONE_PARAMS = 14_714_688

_VGG16_LAYERS = [
    ("conv1_1", 3, 64), ("conv1_2", 64, 64),
    ("conv2_1", 64, 128), ("conv2_2", 128, 128),
    ("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256),
    ("conv4_1", 256, 512), ("conv4_2", 512, 512), ("conv4_3", 512, 512),
    ("conv5_1", 512, 512), ("conv5_2", 512, 512), ("conv5_3", 512, 512),
]
_VGG16_POOL_AFTER = {"conv1_2", "conv2_2", "conv3_3", "conv4_3", "conv5_3"}


@dataclass
class FrameSequence:
    """(N, 224, 224, 3) stack of frames, already normalized for a backbone."""
    frames: np.ndarray
    normalization: str  # "unit_range" | "vgg16_places365"

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[1:] != (FRAME_SIZE, FRAME_SIZE, 3):
            raise ShapeError(f"frames must be (N, {FRAME_SIZE}, {FRAME_SIZE}, 3), "
                             f"got {f.shape}")
        if f.shape[0] < 1:
            raise ShapeError("frame sequence must hold at least one frame")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def normalize_frames(pixels: np.ndarray, tag: str) -> FrameSequence:
    """``pixels`` is (N, 224, 224, 3) uint8 or [0, 1] float RGB."""
    arr = pixels.astype(np.float32)
    if pixels.dtype == np.uint8:
        arr /= 255.0
    if tag == "unit_range":
        return FrameSequence(arr, tag)
    if tag == "vgg16_places365":
        bgr = arr[..., ::-1] * 255.0
        bgr -= np.asarray(VGG16_BGR_MEANS, dtype=np.float32)
        return FrameSequence(np.ascontiguousarray(bgr), tag)
    raise ValueError(f"unknown normalization tag {tag!r}")


class Backbone(Module):
    """Contract: any (224, 224, 3) frame maps to a spatial grid of 512 channels."""

    identifier: str = "backbone"
    normalization: str = "unit_range"
    output_channels: int = BACKBONE_FEATURES

    def spatial_map(self, frames: Tensor, training: bool = False) -> Tensor:
        raise NotImplementedError

    @property
    def frozen(self) -> bool:
        return all(not t.requires_grad for _, t in self.named_params())

    def cache_key(self) -> str:
        """Identity of the weights; invalidates feature caches after finetune."""
        crc = 0
        for _, tensor in self.named_params():
            crc = zlib.crc32(np.ascontiguousarray(tensor.data).tobytes(), crc)
        return f"{self.identifier}-{crc:08x}"


class TinyBackbone(Backbone):
    STAGE_FILTERS = (16, 32, 64)

    def __init__(self, seed: int = 0, dtype=np.float32):
        rng = rng_from_seed(seed)
        self.convs = []
        c_in = 3
        for c_out in self.STAGE_FILTERS:
            self.convs.append(Conv2D(3, c_in, c_out, rng, dtype=dtype))
            c_in = c_out
        self.convs.append(Conv2D(1, c_in, BACKBONE_FEATURES, rng, dtype=dtype))
        self.identifier = f"tiny-{seed}"
        self.normalization = "unit_range"

    def spatial_map(self, frames: Tensor, training: bool = False) -> Tensor:
        h = frames
        for conv in self.convs:
            h = ops.max_pool(h, (2, 2))
            h = ops.relu(conv(h))
        return h  # (N, 14, 14, 512)


class VGG16Backbone(Backbone):
    def __init__(self, dtype=np.float32, seed: int = 0):
        rng = rng_from_seed(seed)
        self.convs = []
        self._layer_names = []
        for name, c_in, c_out in _VGG16_LAYERS:
            self.convs.append(Conv2D(3, c_in, c_out, rng, dtype=dtype))
            self._layer_names.append(name)
        self.identifier = "vgg16-places365"
        self.normalization = "vgg16_places365"
        self.freeze()

    def named_params(self, prefix: str = ""):
        for name, conv in zip(self._layer_names, self.convs):
            yield from conv.named_params(f"{prefix}{name}/")

    def spatial_map(self, frames: Tensor, training: bool = False) -> Tensor:
        h = frames
        for name, conv in zip(self._layer_names, self.convs):
            h = ops.relu(conv(h))
            if name in _VGG16_POOL_AFTER:
                h = ops.max_pool(h, (2, 2))
        return h  # (N, 7, 7, 512)


def load_vgg16_backbone(checkpoint_path) -> VGG16Backbone:
    """Build the frozen VGG16 feature extractor from a converted checkpoint."""
    source, _ = load_checkpoint(checkpoint_path)
    backbone = VGG16Backbone()
    load_into(backbone.param_set(), source, strict=True)
    backbone.freeze()
    return backbone


@dataclass
class VisualForward:
    step_probs: Tensor
    probs: Tensor
    feature_seq: Tensor


class VisualNet(Module):
    """Backbone features -> BiGRU (32 per direction) -> shared dense softmax
    per step -> temporal mean of the step distributions."""

    GRU_UNITS_PER_DIR = 32

    def __init__(self, backbone: Backbone, n_classes: int = 10, seed: int = 0,
                 dtype=np.float32):
        rngs = spawn_rngs(seed, 2)
        self.backbone = backbone
        self.gru = BiGRU(BACKBONE_FEATURES, self.GRU_UNITS_PER_DIR, rngs[0], dtype)
        self.head = Dense(2 * self.GRU_UNITS_PER_DIR, n_classes, rngs[1], dtype)
        self.n_classes = n_classes

    # -- feature extraction ------------------------------------------------

    def backbone_forward(self, frames: FrameSequence | Tensor,
                         training: bool = False, chunk: int = 25) -> Tensor:
        """Per-frame spatial maps averaged to one 512-vector per frame."""
        if isinstance(frames, FrameSequence):
            if frames.normalization != self.backbone.normalization:
                raise ValueError(
                    f"frames normalized as {frames.normalization!r} but backbone "
                    f"expects {self.backbone.normalization!r}")
            frames = Tensor(frames.frames)
        outs = []
        n = frames.shape[0]
        for start in range(0, n, chunk):
            length = min(chunk, n - start)
            piece = ops.narrow(frames, 0, start, length)
            fmap = self.backbone.spatial_map(piece, training)
            if fmap.shape[-1] != BACKBONE_FEATURES:
                raise ShapeError(f"backbone produced {fmap.shape[-1]} channels, "
                                 f"contract is {BACKBONE_FEATURES}")
            outs.append(ops.global_avg_pool(fmap, (1, 2)))
        return outs[0] if len(outs) == 1 else ops.concat(outs, axis=0)

    # -- classification head -------------------------------------------------

    def head_forward(self, feature_seq: Tensor) -> VisualForward:
        """``feature_seq`` is (T, 512) or (N, T, 512)."""
        hidden = self.gru(feature_seq)           # (..., T, 64)
        step_probs = ops.softmax(self.head(hidden), axis=-1)
        step_axis = step_probs.ndim - 2
        probs = ops.mean_axes(step_probs, (step_axis,))
        return VisualForward(step_probs=step_probs, probs=probs,
                             feature_seq=feature_seq)

    def forward(self, frames: FrameSequence, training: bool = False) -> VisualForward:
        features = self.backbone_forward(frames, training)
        return self.head_forward(features)

    def __call__(self, frames: FrameSequence, training: bool = False) -> VisualForward:
        return self.forward(frames, training)

    def head_param_set(self):
        ps = self.gru.param_set("gru/")
        return ps.merged(self.head.param_set(), "head/")
