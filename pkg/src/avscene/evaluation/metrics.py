"""Clip-level evaluation over a manifest split.

Each 10-second example is scored by averaging head probabilities over its
ten one-second windows; the argmax (ties to the lowest class index, which
numpy's argmax already gives) feeds a per-head confusion matrix. Log-loss
clamps probabilities to [1e-7, 1 - 1e-7] so it stays finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..data.loader import read_audio_10s
from ..data.manifest import CLASSES, ManifestEntry, by_split, load_manifest
from ..engine.tensor import Tensor
from ..frontend.rep import make_rep
from ..models.audio_net import AudioNet
from ..models.fusion import AVModel, PredictionBundle
from ..models.visual_net import FRAMES_PER_SECOND, VisualNet
from ..training.features import FrameFeatureCache
from ..training.serialize import load_any_model

LOGLOSS_CLAMP = 1e-7


class MissingHeadError(RuntimeError):
    pass


@dataclass
class EvalReport:
    heads: list[str]
    classes: list[str]
    n_examples: int
    accuracy: dict[str, float]
    log_loss: dict[str, float]
    class_accuracy: dict[str, list[float]]
    confusion: dict[str, list[list[int]]]

    def to_dict(self) -> dict:
        return {
            "heads": self.heads,
            "classes": self.classes,
            "n_examples": self.n_examples,
            "accuracy": self.accuracy,
            "log_loss": self.log_loss,
            "class_accuracy": self.class_accuracy,
            "confusion": self.confusion,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        return EvalReport(heads=list(d["heads"]), classes=list(d["classes"]),
                          n_examples=int(d["n_examples"]),
                          accuracy={k: float(v) for k, v in d["accuracy"].items()},
                          log_loss={k: float(v) for k, v in d["log_loss"].items()},
                          class_accuracy={k: [float(x) for x in v]
                                          for k, v in d["class_accuracy"].items()},
                          confusion={k: [[int(x) for x in row] for row in v]
                                     for k, v in d["confusion"].items()})


def _clamped_nll(probs: np.ndarray, label: int) -> float:
    p = float(np.clip(probs[label], LOGLOSS_CLAMP, 1.0 - LOGLOSS_CLAMP))
    return -float(np.log(p))


class _Accumulator:
    def __init__(self, heads: list[str]):
        self.heads = heads
        self.confusion = {h: np.zeros((len(CLASSES), len(CLASSES)), dtype=np.int64)
                          for h in heads}
        self.nll = {h: 0.0 for h in heads}
        self.n = 0

    def add(self, label: int, probs_by_head: dict[str, np.ndarray]) -> None:
        self.n += 1
        for head in self.heads:
            probs = probs_by_head[head]
            self.confusion[head][label, int(probs.argmax())] += 1
            self.nll[head] += _clamped_nll(probs, label)

    def report(self) -> EvalReport:
        accuracy = {}
        class_acc = {}
        for head in self.heads:
            cm = self.confusion[head]
            accuracy[head] = float(np.trace(cm) / max(self.n, 1))
            counts = cm.sum(axis=1)
            class_acc[head] = [float(cm[i, i] / counts[i]) if counts[i] else 0.0
                               for i in range(len(CLASSES))]
        return EvalReport(
            heads=list(self.heads), classes=list(CLASSES), n_examples=self.n,
            accuracy=accuracy,
            log_loss={h: self.nll[h] / max(self.n, 1) for h in self.heads},
            class_accuracy=class_acc,
            confusion={h: self.confusion[h].tolist() for h in self.heads})


def predict_audio_clip(net: AudioNet, clip, filterbank: str) -> np.ndarray:
    n_windows = int(clip.duration_seconds)
    reps = np.stack([make_rep(clip.slice_seconds(k, 1.0), filterbank).values
                     for k in range(n_windows)])
    out = net.forward(Tensor(reps), training=False)
    return np.asarray(out.probs.data, dtype=np.float64).mean(axis=0)


def predict_visual_features(net: VisualNet, features: np.ndarray) -> np.ndarray:
    n_windows = features.shape[0] // FRAMES_PER_SECOND
    feats = features[:n_windows * FRAMES_PER_SECOND].reshape(
        n_windows, FRAMES_PER_SECOND, -1)
    out = net.head_forward(Tensor(feats.astype(np.float32)))
    return np.asarray(out.probs.data, dtype=np.float64).mean(axis=0)


def evaluate_checkpoint(checkpoint: str | Path, manifest: str | Path,
                        split: str = "val",
                        cache_dir: Optional[str | Path] = None,
                        heads: Optional[list[str]] = None) -> EvalReport:
    kind, model, extra = load_any_model(Path(checkpoint))
    available = {"audio": ["audio"], "visual": ["visual"],
                 "av": list(PredictionBundle.HEADS)}[kind]
    wanted = heads or available
    missing = [h for h in wanted if h not in available]
    if missing:
        raise MissingHeadError(f"checkpoint {checkpoint} has no head(s) {missing}; "
                               f"available: {available}")

    entries = by_split(load_manifest(manifest), split)
    filterbank = extra.get("filterbank", "gammatone")
    acc = _Accumulator(wanted)

    cache = None
    if kind in ("visual", "av"):
        visual_net = model if kind == "visual" else model.visual_net
        cache = FrameFeatureCache(visual_net,
                                  Path(cache_dir) if cache_dir else None)

    for entry in entries:
        probs: dict[str, np.ndarray] = {}
        if kind == "audio":
            clip = read_audio_10s(entry)
            probs["audio"] = predict_audio_clip(model, clip, filterbank)
        elif kind == "visual":
            probs["visual"] = predict_visual_features(model, cache.features(entry))
        else:
            clip = read_audio_10s(entry)
            bundle = model.predict_clip(clip, cache.features(entry), filterbank)
            probs = {h: bundle.head(h) for h in PredictionBundle.HEADS}
        acc.add(entry.label_index, probs)
    return acc.report()
