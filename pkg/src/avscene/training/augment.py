"""Training-time augmentation: aligned one-second crops and mixup."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data.loader import AlignedExample
from ..frontend.wavio import AudioClip
from ..models.visual_net import FRAMES_PER_SECOND, FrameSequence

GRID_SECONDS = 0.2                 # the 5 fps frame grid
N_OFFSETS = 46                     # offsets 0.0 .. 9.0 s inclusive
SAMPLES_PER_GRID = 8820            # 0.2 s at 44.1 kHz


@dataclass
class CropIndex:
    """Aligned window: frame k .. k+4 covers [k*0.2, k*0.2 + 1.0) seconds."""
    grid_offset: int

    @property
    def start_seconds(self) -> float:
        return self.grid_offset * GRID_SECONDS

    @property
    def sample_start(self) -> int:
        return self.grid_offset * SAMPLES_PER_GRID

    @property
    def frame_start(self) -> int:
        return self.grid_offset

    @property
    def frame_stop(self) -> int:
        return self.grid_offset + FRAMES_PER_SECOND


def draw_crop(rng: np.random.Generator) -> CropIndex:
    return CropIndex(int(rng.integers(0, N_OFFSETS)))


def center_crop() -> CropIndex:
    return CropIndex(N_OFFSETS // 2)


def random_crop_1s(example: AlignedExample,
                   rng: np.random.Generator) -> tuple[AudioClip, FrameSequence]:
    """Uniformly random aligned 1 s window of a 10 s example."""
    if example.clip.duration_seconds < 1.0:
        raise ValueError("example shorter than one second cannot be cropped")
    crop = draw_crop(rng)
    clip = example.clip.slice_seconds(crop.start_seconds, 1.0)
    frames = FrameSequence(
        example.frames.frames[crop.frame_start:crop.frame_stop],
        example.frames.normalization)
    return clip, frames


def one_hot(labels: Sequence[int], n_classes: int = 10) -> np.ndarray:
    return np.eye(n_classes, dtype=np.float32)[np.asarray(labels)]


def mixup_batch(inputs, labels: np.ndarray, alpha: float,
                rng: np.random.Generator):
    """Convex-combine a batch with a shuffled partner batch.

    One lambda ~ Beta(alpha, alpha) and one pairing permutation are drawn
    per call and applied to every modality in ``inputs`` (a single array or
    a sequence of arrays sharing the batch axis) and to ``labels``.

    Returns ``(mixed_inputs, mixed_labels, lam)`` with the input structure
    preserved.
    """
    single = isinstance(inputs, np.ndarray)
    arrays: list[np.ndarray] = [inputs] if single else list(inputs)
    n = arrays[0].shape[0]
    if n < 2:
        raise ValueError("mixup needs a batch of at least 2 examples")
    for a in arrays:
        if a.shape[0] != n:
            raise ValueError(f"modalities disagree on batch size: {a.shape[0]} vs {n}")
    lam = float(rng.beta(alpha, alpha))
    perm = rng.permutation(n)
    lam_t = np.asarray(lam, dtype=arrays[0].dtype)
    mixed = [lam_t * a + (1 - lam_t) * a[perm] for a in arrays]
    mixed_labels = lam * labels + (1 - lam) * labels[perm]
    mixed_labels = mixed_labels.astype(labels.dtype, copy=False)
    return (mixed[0] if single else mixed), mixed_labels, lam
