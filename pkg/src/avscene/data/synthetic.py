"""Synthetic complementary-modality dataset.

Each of the 10 scene classes gets an audio signature (a triple of tone
frequencies plus noise) and a visual signature (striped color pattern plus
block pixel noise). Two classes share the same audio signature but differ
visually; two share the same visual signature but differ audibly, so
fusing modalities is required for a perfect score.

Examples are 10-second stereo WAVs plus 50 PNG frames. Frames cycle
through five per-example noise fields, so any one-second crop still sees
in-crop variation while generation and feature extraction stay cheap.
Everything is deterministic in the spec seed.
"""
from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..frontend.rep import band_energies
from ..frontend.wavio import AudioClip, write_wav
from .manifest import CLASSES, FRAME_PATTERN, MANIFEST_HEADER, write_manifest

SAMPLE_RATE = 44100
CLIP_SECONDS = 10
N_FRAMES = 50
FRAME_SIZE = 224
NOISE_FIELDS = 5
_BLOCK = 8  # pixel-noise block size; keeps PNGs small

# 12 log-spaced candidate tone frequencies, 250 Hz .. 8 kHz
_TONE_POOL = 250.0 * (8000.0 / 250.0) ** (np.arange(12) / 11.0)

# pool indices per audio identity; any two rows share at most one tone
_TONE_TRIPLES = (
    (0, 4, 8), (1, 5, 9), (2, 6, 10), (3, 7, 11), (0, 5, 10),
    (1, 6, 11), (2, 7, 8), (3, 4, 9), (0, 6, 9), (3, 5, 8),
)


@dataclass
class SyntheticSpec:
    examples_per_class: int = 20
    seed: int = 0
    audio_noise: float = 0.01
    frame_noise: int = 6
    train_fraction: float = 0.7
    # class-index pairs forced to share a signature in one modality
    audio_ambiguous: tuple[int, int] = (0, 1)
    visual_ambiguous: tuple[int, int] = (2, 3)

    n_classes: int = field(init=False, default=len(CLASSES))

    def audio_identity(self, class_idx: int) -> int:
        a, b = self.audio_ambiguous
        if class_idx == b:
            return a
        return class_idx

    def visual_identity(self, class_idx: int) -> int:
        a, b = self.visual_ambiguous
        if class_idx == b:
            return a
        return class_idx

    def tone_table(self) -> dict[str, list[float]]:
        table = {}
        for idx, name in enumerate(CLASSES):
            k = self.audio_identity(idx)
            tones = [_TONE_POOL[i] for i in _TONE_TRIPLES[k]]
            table[name] = [float(f) for f in sorted(tones)]
        return table

    def pattern_table(self) -> dict[str, dict]:
        table = {}
        for idx, name in enumerate(CLASSES):
            k = self.visual_identity(idx)
            bg = colorsys.hsv_to_rgb(k / self.n_classes, 0.85, 0.45)
            fg = colorsys.hsv_to_rgb((k / self.n_classes + 0.45) % 1.0, 0.9, 0.95)
            table[name] = {
                "background": [int(c * 255) for c in bg],
                "stripe": [int(c * 255) for c in fg],
                "orientation": ("horizontal", "vertical", "diagonal")[k % 3],
                "stripe_width": 16 + 8 * (k % 4),
            }
        return table

    def to_dict(self) -> dict:
        return {
            "examples_per_class": self.examples_per_class,
            "seed": self.seed,
            "audio_noise": self.audio_noise,
            "frame_noise": self.frame_noise,
            "train_fraction": self.train_fraction,
            "audio_ambiguous": list(self.audio_ambiguous),
            "visual_ambiguous": list(self.visual_ambiguous),
            "classes": list(CLASSES),
            "tones": self.tone_table(),
            "patterns": self.pattern_table(),
        }


def _render_pattern(params: dict) -> np.ndarray:
    bg = np.asarray(params["background"], dtype=np.int16)
    fg = np.asarray(params["stripe"], dtype=np.int16)
    width = params["stripe_width"]
    yy, xx = np.mgrid[0:FRAME_SIZE, 0:FRAME_SIZE]
    if params["orientation"] == "horizontal":
        coord = yy
    elif params["orientation"] == "vertical":
        coord = xx
    else:
        coord = xx + yy
    stripe = (coord // width) % 2 == 0
    img = np.where(stripe[..., None], fg, bg)
    return img.astype(np.int16)


def _synth_audio(tones: list[float], rng: np.random.Generator,
                 noise: float) -> AudioClip:
    t = np.arange(CLIP_SECONDS * SAMPLE_RATE) / SAMPLE_RATE
    mix = np.zeros_like(t)
    for f in tones:
        amp = rng.uniform(0.12, 0.25)
        phase = rng.uniform(0, 2 * np.pi)
        mix += amp * np.sin(2 * np.pi * f * t + phase)
    gain_l = rng.uniform(0.8, 1.0)
    gain_r = rng.uniform(0.8, 1.0)
    left = gain_l * mix + rng.normal(0.0, noise, t.size)
    right = gain_r * mix + rng.normal(0.0, noise, t.size)
    peak = max(np.abs(left).max(), np.abs(right).max(), 1.0)
    return AudioClip(left / peak, right / peak, SAMPLE_RATE)


def _render_frames(pattern: np.ndarray, rng: np.random.Generator,
                   noise: int) -> list[bytes]:
    """Five encoded PNG payloads; frame j on disk reuses payload j % 5."""
    import io
    grid = FRAME_SIZE // _BLOCK
    payloads = []
    for _ in range(NOISE_FIELDS):
        blocks = rng.integers(-noise, noise + 1, (grid, grid, 3)).astype(np.int16)
        full = np.kron(blocks, np.ones((_BLOCK, _BLOCK, 1), dtype=np.int16))
        frame = np.clip(pattern + full, 0, 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(frame).save(buf, format="PNG", compress_level=1)
        payloads.append(buf.getvalue())
    return payloads


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Write the dataset and return the manifest path. Idempotent per seed."""
    out = Path(out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    (out / "frames").mkdir(exist_ok=True)
    tone_table = spec.tone_table()
    pattern_table = spec.pattern_table()

    rows: list[dict] = []
    n_train = int(round(spec.train_fraction * spec.examples_per_class))
    for class_idx, label in enumerate(CLASSES):
        pattern = _render_pattern(pattern_table[label])
        for k in range(spec.examples_per_class):
            example_id = f"{label}-{k:04d}"
            # one child stream per example, keyed by stable coordinates
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([spec.seed, class_idx, k])))
            clip = _synth_audio(tone_table[label], rng, spec.audio_noise)
            wav_rel = f"audio/{example_id}.wav"
            write_wav(out / wav_rel, clip)

            frames_rel = f"frames/{example_id}"
            frame_dir = out / frames_rel
            frame_dir.mkdir(exist_ok=True)
            payloads = _render_frames(pattern, rng, spec.frame_noise)
            for j in range(N_FRAMES):
                (frame_dir / FRAME_PATTERN.format(j)).write_bytes(
                    payloads[j % NOISE_FIELDS])

            rows.append({
                "id": example_id,
                "audio_path": wav_rel,
                "frames_dir": frames_rel,
                "label": label,
                "city": "synthville",
                "location": f"loc{class_idx:02d}",
                "split": "train" if k < n_train else "val",
            })

    manifest_path = out / "manifest.csv"
    write_manifest(manifest_path, rows)
    (out / "dataset.json").write_text(
        json.dumps(spec.to_dict(), indent=1, sort_keys=True))
    return manifest_path


def separability_self_test(manifest_path: str | Path,
                           per_class: int = 12) -> dict:
    """Nearest-centroid check on mean band energies.

    Returns accuracies over the audio-separable classes and the
    audio-ambiguous pair; the generator's contract is >= 0.95 for the
    former and chance-level for the latter.
    """
    from ..frontend.wavio import read_wav
    from .manifest import load_manifest

    spec_meta = json.loads((Path(manifest_path).parent / "dataset.json").read_text())
    ambiguous = set(spec_meta["audio_ambiguous"])
    entries = load_manifest(manifest_path)
    chosen: dict[str, list] = {}
    for e in entries:
        chosen.setdefault(f"{e.label}:{e.split}", [])
        if len(chosen[f"{e.label}:{e.split}"]) < per_class:
            chosen[f"{e.label}:{e.split}"].append(e)

    def mean_spectrum(entry) -> np.ndarray:
        clip = read_wav(entry.audio_path)
        short = AudioClip(clip.left[:2 * SAMPLE_RATE], clip.right[:2 * SAMPLE_RATE],
                          clip.sample_rate)
        e = band_energies(short, "mel")
        return np.log(e + 1e-10).mean(axis=(1, 2))

    centroids = {}
    for label_idx, label in enumerate(CLASSES):
        train = chosen.get(f"{label}:train", [])
        centroids[label_idx] = np.mean([mean_spectrum(e) for e in train], axis=0)

    hits_sep = total_sep = hits_amb = total_amb = 0
    for label_idx, label in enumerate(CLASSES):
        for e in chosen.get(f"{label}:val", []):
            spec_vec = mean_spectrum(e)
            dists = {c: np.linalg.norm(spec_vec - mu) for c, mu in centroids.items()}
            pred = min(dists, key=dists.get)
            if label_idx in ambiguous:
                total_amb += 1
                hits_amb += pred == label_idx
            else:
                total_sep += 1
                hits_sep += pred == label_idx
    return {
        "separable_accuracy": hits_sep / max(total_sep, 1),
        "ambiguous_accuracy": hits_amb / max(total_amb, 1),
    }
