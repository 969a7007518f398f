"""Staged training.

Stages and their freezing matrix:

* ``audio``:    audio subnetwork from scratch, everything trainable.
* ``visual``:   BiGRU + dense head only; the backbone stays frozen.
* ``fusion``:   fusion heads only; both subnetworks frozen and run in
                inference mode (requires audio + visual checkpoints).
* ``finetune``: everything unfrozen at a very small learning rate
                (requires the fusion checkpoint; tiny-backbone path only).

Each epoch draws a fresh aligned one-second crop per training example,
optionally mixes the batch (one lambda and pairing shared across
modalities), and evaluates the stage head on one-second center crops of
the validation split. Plateau halving and early stopping follow the
validation accuracy; the best epoch's weights are restored at the end.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..data.loader import read_audio_10s
from ..data.manifest import ManifestEntry, by_split, load_manifest
from ..engine.init import spawn_rngs
from ..engine.optim import Adam
from ..engine.ops import add, cross_entropy
from ..engine.tensor import Tensor
from ..frontend.rep import make_rep
from ..models.audio_net import AudioNet, AudioNetConfig
from ..models.fusion import AVModel
from ..models.visual_net import TinyBackbone, VisualNet
from .augment import CropIndex, center_crop, draw_crop, mixup_batch, one_hot
from .config import TrainConfig
from .features import FrameFeatureCache
from .history import EpochRecord, TrainHistory
from .schedule import EarlyStopper, PlateauScheduler
from .serialize import (backbone_from_spec, load_audio_model, load_av_model,
                        load_visual_model, save_audio_model, save_av_model,
                        save_visual_model)

log = logging.getLogger(__name__)


@dataclass
class StageResult:
    checkpoint_path: Path
    history: TrainHistory
    model: object


class FrozenWeightViolation(AssertionError):
    pass


def _crop_rep(entry: ManifestEntry, crop: CropIndex, filterbank: str) -> np.ndarray:
    clip = read_audio_10s(entry).slice_seconds(crop.start_seconds, 1.0)
    return make_rep(clip, filterbank).values


class _StageContext:
    """Batch assembly and loss wiring for one stage."""

    def __init__(self, stage: str, config: TrainConfig, model,
                 cache: Optional[FrameFeatureCache]):
        self.stage = stage
        self.config = config
        self.model = model
        self.cache = cache

    # -- inputs ---------------------------------------------------------

    def batch_inputs(self, entries: list[ManifestEntry],
                     crops: list[CropIndex]) -> list[np.ndarray]:
        arrays = []
        if self.stage in ("audio", "fusion", "finetune"):
            arrays.append(np.stack([
                _crop_rep(e, c, self.config.filterbank)
                for e, c in zip(entries, crops)]))
        if self.stage in ("visual", "fusion"):
            arrays.append(np.stack([
                self.cache.feature_tensor(e, c.frame_start, c.frame_stop)
                for e, c in zip(entries, crops)]))
        elif self.stage == "finetune":
            # backbone unfrozen: gradients must reach the pixels, so the
            # frozen-feature cache cannot serve this stage
            from ..data.loader import load_frame_range
            from ..models.visual_net import normalize_frames
            norm = self.model.visual_net.backbone.normalization
            frames = np.stack([
                normalize_frames(
                    load_frame_range(e.frames_dir, c.frame_start, c.frame_stop),
                    norm).frames
                for e, c in zip(entries, crops)])
            arrays.append(frames)
        return arrays

    # -- loss and metric head -------------------------------------------

    def forward_loss(self, arrays: list[np.ndarray], targets: np.ndarray,
                     training: bool, rng) -> tuple[Tensor, np.ndarray]:
        t = Tensor(targets)
        if self.stage == "audio":
            out = self.model.forward(Tensor(arrays[0]), training, rng)
            return cross_entropy(out.probs, t), out.probs.data
        if self.stage == "visual":
            out = self.model.head_forward(Tensor(arrays[0]))
            return cross_entropy(out.probs, t), out.probs.data
        rep, feats = Tensor(arrays[0]), Tensor(arrays[1])
        if self.stage == "fusion":
            out = self.model.forward(rep, feats, training=training, rng=rng,
                                     subnets_training=False)
            loss = add(cross_entropy(out.early, t), cross_entropy(out.late, t))
            return loss, out.late.data
        # finetune: arrays[1] holds pixels (B, 5, 224, 224, 3); run the
        # backbone inside the graph so its weights receive gradients
        from ..engine import ops
        b, n_frames = feats.shape[0], feats.shape[1]
        flat = ops.reshape(feats, (b * n_frames,) + feats.shape[2:])
        per_frame = self.model.visual_net.backbone_forward(flat, training=training)
        feature_seq = ops.reshape(per_frame, (b, n_frames, per_frame.shape[-1]))
        out = self.model.forward(rep, feature_seq, training=training, rng=rng,
                                 subnets_training=training)
        loss = add(add(cross_entropy(out.audio, t), cross_entropy(out.visual, t)),
                   add(cross_entropy(out.early, t), cross_entropy(out.late, t)))
        return loss, out.late.data


def _build_stage(config: TrainConfig, out_dir: Path,
                 audio_checkpoint: Optional[Path],
                 visual_checkpoint: Optional[Path],
                 fusion_checkpoint: Optional[Path],
                 cache_dir: Optional[Path]):
    """Returns (model, context, frozen_subset_paths, saver)."""
    stage = config.stage
    if stage == "audio":
        model = AudioNet(AudioNetConfig(seed=config.seed))
        ctx = _StageContext(stage, config, model, None)
        saver = lambda path: save_audio_model(  # noqa: E731
            path, model, config.filterbank, ["audio"], config.seed)
        return model, ctx, [], saver

    if stage == "visual":
        backbone = backbone_from_spec(config.backbone, config.backbone_seed)
        backbone.freeze()
        model = VisualNet(backbone, seed=config.seed)
        cache = FrameFeatureCache(model, cache_dir)
        ctx = _StageContext(stage, config, model, cache)
        frozen = [p for p, _ in backbone.named_params("backbone/")]
        saver = lambda path: save_visual_model(  # noqa: E731
            path, model, config.backbone_seed, ["visual"], config.seed)
        return model, ctx, frozen, saver

    if stage == "fusion":
        if not audio_checkpoint or not visual_checkpoint:
            raise FileNotFoundError("fusion stage requires --audio-checkpoint "
                                    "and --visual-checkpoint")
        audio_net, audio_extra = load_audio_model(Path(audio_checkpoint))
        visual_net, visual_extra = load_visual_model(Path(visual_checkpoint))
        audio_net.set_trainable(False)
        visual_net.set_trainable(False)
        model = AVModel(audio_net, visual_net, seed=config.seed)
        cache = FrameFeatureCache(visual_net, cache_dir)
        ctx = _StageContext(stage, config, model, cache)
        frozen = ([f"audio/{p}" for p, _ in audio_net.named_params()]
                  + [f"visual/{p}" for p, _ in visual_net.named_params()])
        provenance = (audio_extra.get("stage_provenance", [])
                      + visual_extra.get("stage_provenance", []) + ["fusion"])
        saver = lambda path: save_av_model(  # noqa: E731
            path, model, config.filterbank, config.backbone_seed,
            provenance, config.seed)
        return model, ctx, frozen, saver

    # finetune
    if not fusion_checkpoint:
        raise FileNotFoundError("finetune stage requires --fusion-checkpoint")
    model, extra = load_av_model(Path(fusion_checkpoint))
    if not isinstance(model.visual_net.backbone, TinyBackbone):
        raise ValueError("finetune is a tiny-backbone path at desk scale; "
                         "the VGG16 stack stays frozen")
    model.set_trainable(True)
    ctx = _StageContext("finetune", config, model, None)  # pixels, no cache
    provenance = extra.get("stage_provenance", []) + ["finetune"]
    saver = lambda path: save_av_model(  # noqa: E731
        path, model, config.filterbank, config.backbone_seed,
        provenance, config.seed)
    return model, ctx, [], saver


def run_stage(config: TrainConfig, manifest_path: str | Path, out_dir: str | Path,
              audio_checkpoint: Optional[str | Path] = None,
              visual_checkpoint: Optional[str | Path] = None,
              fusion_checkpoint: Optional[str | Path] = None,
              cache_dir: Optional[str | Path] = None,
              progress: Optional[Callable[[str], None]] = None) -> StageResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cache_dir is None:
        cache_dir = out_dir / "feature_cache"
    entries = load_manifest(manifest_path)
    train_entries = by_split(entries, "train")
    val_entries = by_split(entries, "val")

    model, ctx, frozen_paths, saver = _build_stage(
        config, out_dir, audio_checkpoint, visual_checkpoint,
        fusion_checkpoint, Path(cache_dir))
    params = model.param_set()
    frozen_baseline = {p: params[p].data.copy() for p in frozen_paths}

    if ctx.cache is not None:
        ctx.cache.warm(entries)

    shuffle_rng, crop_rng, mixup_rng, dropout_rng = spawn_rngs(config.seed, 4)
    optimizer = Adam(params, alpha=config.lr_init)
    scheduler = PlateauScheduler(config.lr_init, config.plateau_factor,
                                 config.plateau_patience)
    stopper = EarlyStopper(config.early_stop_patience)
    history = TrainHistory()
    best_snapshot = params.snapshot()
    best_acc = float("-inf")
    notify = progress or (lambda msg: log.info("%s", msg))

    n_classes = 10
    val_crop = center_crop()
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        lr = scheduler.lr
        optimizer.alpha = lr

        order = shuffle_rng.permutation(len(train_entries))
        total_loss = 0.0
        seen = 0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_entries[i] for i in order[start:start + config.batch_size]]
            crops = [draw_crop(crop_rng) for _ in chunk]
            arrays = ctx.batch_inputs(chunk, crops)
            targets = one_hot([e.label_index for e in chunk], n_classes)
            if config.mixup and len(chunk) >= 2:
                arrays, targets, _ = mixup_batch(arrays, targets,
                                                 config.mixup_alpha, mixup_rng)
            optimizer.zero_grad()
            loss, _ = ctx.forward_loss(arrays, targets, True, dropout_rng)
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(chunk)
            seen += len(chunk)
        train_loss = total_loss / max(seen, 1)

        val_loss, val_acc = _validate(ctx, val_entries, val_crop,
                                      config.batch_size, n_classes)
        seconds = time.perf_counter() - t0 if config.record_walltime else 0.0
        history.append(EpochRecord(epoch, train_loss, val_loss, val_acc, lr, seconds))
        notify(f"[{config.stage}] epoch {epoch}: train {train_loss:.4f} "
               f"val {val_loss:.4f} acc {val_acc:.4f} lr {lr:g}")

        if val_acc > best_acc:
            best_acc = val_acc
            best_snapshot = params.snapshot()
        scheduler.update(val_acc)
        if stopper.update(val_acc):
            history.stop_reason = "early_stop"
            break

    history.best_epoch = stopper.best_epoch
    params.restore(best_snapshot)

    for path in frozen_paths:
        if not np.array_equal(params[path].data, frozen_baseline[path]):
            raise FrozenWeightViolation(f"frozen parameter {path!r} changed "
                                        f"during stage {config.stage!r}")

    checkpoint_path = out_dir / f"{config.stage}.ckpt"
    saver(checkpoint_path)
    history.to_csv(out_dir / "history.csv")
    history.to_json(out_dir / "history.json")
    return StageResult(checkpoint_path=checkpoint_path, history=history, model=model)


def _validate(ctx: _StageContext, val_entries: list[ManifestEntry],
              crop: CropIndex, batch_size: int,
              n_classes: int) -> tuple[float, float]:
    total_loss = 0.0
    hits = 0
    for start in range(0, len(val_entries), batch_size):
        chunk = val_entries[start:start + batch_size]
        crops = [crop] * len(chunk)
        arrays = ctx.batch_inputs(chunk, crops)
        labels = [e.label_index for e in chunk]
        targets = one_hot(labels, n_classes)
        loss, probs = ctx.forward_loss(arrays, targets, False, None)
        total_loss += loss.item() * len(chunk)
        hits += int((probs.argmax(axis=1) == np.asarray(labels)).sum())
    n = len(val_entries)
    return total_loss / n, hits / n
