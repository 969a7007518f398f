"""Per-frame backbone feature cache.

Backbones are frozen during the visual and fusion stages, so the 512-d
feature of a frame is a pure function of its pixels. Features are keyed by
the backbone's weight checksum (finetuned weights produce a different key)
and memoized in RAM plus optionally on disk as .npy files. Identical
frames inside an example (byte-equal PNG payloads) are deduplicated before
hitting the backbone.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Optional

import numpy as np

from ..data.loader import load_frame_pixels
from ..data.manifest import ManifestEntry
from ..models.visual_net import VisualNet, normalize_frames


class FrameFeatureCache:
    def __init__(self, visual_net: VisualNet, cache_dir: Optional[Path] = None):
        self.net = visual_net
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memory: dict[str, np.ndarray] = {}
        self._key = visual_net.backbone.cache_key()
        if self.cache_dir:
            (self.cache_dir / self._key).mkdir(parents=True, exist_ok=True)

    def _disk_path(self, example_id: str) -> Optional[Path]:
        if not self.cache_dir:
            return None
        return self.cache_dir / self._key / f"{example_id}.npy"

    def features(self, entry: ManifestEntry) -> np.ndarray:
        """(50, 512) float32 feature sequence for a 10 s example."""
        cached = self._memory.get(entry.example_id)
        if cached is not None:
            return cached
        disk = self._disk_path(entry.example_id)
        if disk is not None and disk.exists():
            feats = np.load(disk)
        else:
            feats = self._compute(entry)
            if disk is not None:
                np.save(disk, feats)
        self._memory[entry.example_id] = feats
        return feats

    def _compute(self, entry: ManifestEntry) -> np.ndarray:
        pixels = load_frame_pixels(entry.frames_dir)
        digests = [hashlib.blake2b(frame.tobytes(), digest_size=16).digest()
                   for frame in pixels]
        unique: dict[bytes, int] = {}
        for d in digests:
            unique.setdefault(d, len(unique))
        reps = np.stack([pixels[digests.index(d)] for d in unique], axis=0)
        seq = normalize_frames(reps, self.net.backbone.normalization)
        feats_unique = self.net.backbone_forward(seq).data.astype(np.float32)
        index = np.asarray([unique[d] for d in digests])
        return np.ascontiguousarray(feats_unique[index])

    def warm(self, entries: list[ManifestEntry]) -> None:
        for entry in entries:
            self.features(entry)

    def feature_tensor(self, entry: ManifestEntry, start: int, stop: int) -> np.ndarray:
        return self.features(entry)[start:stop]
