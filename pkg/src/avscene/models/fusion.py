"""Early/late fusion of the audio and visual specialists.

Per one-second window: the audio feature maps (64, T', 128) are averaged
over frequency and adaptively pooled over time into 5 steps, concatenated
behind the 5-step visual features as (5, 512 + 128) = (5, 640), processed
by a bidirectional GRU (64 units per direction), pooled over steps and
classified (early fusion). The late head stacks the audio, visual and
early distributions into a 30-vector and maps it through a dense softmax.

Feature order contracts: early fusion steps are visual(512) ++ audio(128);
the late head input is audio(10) ++ visual(10) ++ early(10).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine import ops
from ..engine.init import spawn_rngs
from ..engine.tensor import ShapeError, Tensor
from .audio_net import AudioNet
from .layers import BiGRU, Dense, Module
from .visual_net import FRAMES_PER_SECOND, VisualNet

FUSED_FEATURES = 640
EARLY_GRU_UNITS_PER_DIR = 64


def audio_to_sequence(feature_maps: Tensor, n_steps: int = FRAMES_PER_SECOND) -> Tensor:
    """(64, T', 128) or (N, 64, T', 128) -> (n_steps, 128) / (N, n_steps, 128).

    Frequency axis is fully averaged; the time axis is averaged into
    ``n_steps`` contiguous bins with boundaries floor(b * T' / n_steps).
    """
    batched = feature_maps.ndim == 4
    if feature_maps.ndim not in (3, 4):
        raise ShapeError(f"feature maps must be 3-d or 4-d, got {feature_maps.shape}")
    t_axis = 2 if batched else 1
    if feature_maps.shape[t_axis] < n_steps:
        raise ShapeError(f"time axis {feature_maps.shape[t_axis]} shorter than "
                         f"{n_steps} fusion steps")
    freq_axis = 1 if batched else 0
    over_freq = ops.mean_axes(feature_maps, (freq_axis,))
    return ops.adaptive_avg_pool_to(over_freq, n_steps, axis=1 if batched else 0)


@dataclass
class PredictionBundle:
    """The four per-head probability vectors (each sums to 1)."""
    audio: np.ndarray
    visual: np.ndarray
    early: np.ndarray
    late: np.ndarray

    HEADS = ("audio", "visual", "early", "late")

    def head(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {h: np.asarray(self.head(h)).tolist() for h in self.HEADS}


@dataclass
class AVForward:
    audio: Tensor
    visual: Tensor
    early: Tensor
    late: Tensor

    def bundle(self) -> PredictionBundle:
        take = lambda t: np.asarray(t.data, dtype=np.float64)
        return PredictionBundle(take(self.audio), take(self.visual),
                                take(self.early), take(self.late))


class AVModel(Module):
    """Full audio-visual network over aligned one-second inputs."""

    def __init__(self, audio_net: AudioNet, visual_net: VisualNet,
                 n_classes: int = 10, seed: int = 0, dtype=np.float32):
        rngs = spawn_rngs(seed + 7, 3)
        self.audio_net = audio_net
        self.visual_net = visual_net
        self.early_gru = BiGRU(FUSED_FEATURES, EARLY_GRU_UNITS_PER_DIR, rngs[0], dtype)
        self.early_head = Dense(2 * EARLY_GRU_UNITS_PER_DIR, n_classes, rngs[1], dtype)
        self.late_head = Dense(3 * n_classes, n_classes, rngs[2], dtype)
        self.n_classes = n_classes

    def named_params(self, prefix: str = ""):
        yield from self.audio_net.named_params(f"{prefix}audio/")
        yield from self.visual_net.named_params(f"{prefix}visual/")
        yield from self.early_gru.named_params(f"{prefix}fusion/early_gru/")
        yield from self.early_head.named_params(f"{prefix}fusion/early_head/")
        yield from self.late_head.named_params(f"{prefix}fusion/late_head/")

    def fusion_param_set(self):
        ps = self.early_gru.param_set("fusion/early_gru/")
        ps = ps.merged(self.early_head.param_set(), "fusion/early_head/")
        return ps.merged(self.late_head.param_set(), "fusion/late_head/")

    # -- heads ------------------------------------------------------------

    def early_fusion_forward(self, visual_seq: Tensor, audio_seq: Tensor) -> Tensor:
        """(..., 5, 512) + (..., 5, 128) -> class distribution."""
        step_axis = visual_seq.ndim - 2
        if visual_seq.shape[step_axis] != audio_seq.shape[step_axis]:
            raise ShapeError(f"step counts differ: visual {visual_seq.shape[step_axis]} "
                             f"vs audio {audio_seq.shape[step_axis]}")
        fused = ops.concat([visual_seq, audio_seq], axis=-1)
        hidden = self.early_gru(fused)                      # (..., 5, 128)
        pooled = ops.mean_axes(hidden, (step_axis,))        # (..., 128)
        return ops.softmax(self.early_head(pooled), axis=-1)

    def late_fusion(self, p_audio: Tensor, p_visual: Tensor, p_early: Tensor) -> Tensor:
        stackd = ops.concat([p_audio, p_visual, p_early], axis=-1)
        return ops.softmax(self.late_head(stackd), axis=-1)

    # -- full forward -------------------------------------------------------

    def forward(self, rep: Tensor, visual_features: Tensor,
                training: bool = False,
                rng: Optional[np.random.Generator] = None,
                subnets_training: Optional[bool] = None) -> AVForward:
        """``rep``: one-second audio input (64, 50, 3) or batched;
        ``visual_features``: matching (5, 512) or batched backbone features.

        ``subnets_training`` controls batch-norm/dropout behavior inside the
        specialist subnetworks separately from the fusion heads: the fusion
        stage trains with frozen subnets running in inference mode.
        """
        sub = training if subnets_training is None else subnets_training
        audio_out = self.audio_net.forward(rep, sub, rng)
        visual_out = self.visual_net.head_forward(visual_features)
        audio_seq = audio_to_sequence(audio_out.feature_maps)
        p_early = self.early_fusion_forward(visual_features, audio_seq)
        p_late = self.late_fusion(audio_out.probs, visual_out.probs, p_early)
        return AVForward(audio=audio_out.probs, visual=visual_out.probs,
                         early=p_early, late=p_late)

    def predict_clip(self, clip, visual_features: np.ndarray,
                     filterbank: str = "gammatone") -> PredictionBundle:
        """Averaged per-head predictions over the non-overlapping one-second
        windows of an aligned clip.

        ``clip`` is a 10 s (or any whole-second) stereo AudioClip at
        44.1 kHz; ``visual_features`` the matching (5 * seconds, 512)
        backbone features. A trailing sub-second remainder is dropped with
        a warning.
        """
        import warnings

        from ..frontend.rep import make_rep
        from .visual_net import FRAMES_PER_SECOND

        n_windows = int(clip.duration_seconds)
        if n_windows < 1:
            raise ShapeError("predict_clip needs at least one full second of audio")
        if clip.duration_seconds != n_windows:
            warnings.warn(f"dropping trailing {clip.duration_seconds - n_windows:.2f} s "
                          "remainder", stacklevel=2)
        reps = np.stack([
            make_rep(clip.slice_seconds(k, 1.0), filterbank).values
            for k in range(n_windows)])
        feats = np.stack([
            visual_features[k * FRAMES_PER_SECOND:(k + 1) * FRAMES_PER_SECOND]
            for k in range(n_windows)]).astype(np.float32)
        out = self.forward(Tensor(reps), Tensor(feats), training=False)
        bundle = out.bundle()
        return PredictionBundle(*(bundle.head(h).mean(axis=0)
                                  for h in PredictionBundle.HEADS))
