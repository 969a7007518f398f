"""Example loading: 10-second aligned audio + frame stacks."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..frontend.wavio import AudioClip, AudioFileError, read_wav
from ..models.visual_net import FRAME_SIZE, FrameSequence, normalize_frames
from .manifest import FRAMES_PER_CLIP, ManifestEntry

CLIP_SECONDS = 10
SAMPLES_10S = 441_000
SAMPLE_TOLERANCE = 882  # one hop


class ExampleError(RuntimeError):
    pass


@dataclass
class AlignedExample:
    entry: ManifestEntry
    clip: AudioClip
    frames: FrameSequence


def _decode_frame(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ExampleError(f"corrupt frame {path}: {exc}") from exc
    if arr.shape != (FRAME_SIZE, FRAME_SIZE, 3):
        raise ExampleError(f"{path}: frame is {arr.shape[1]}x{arr.shape[0]}, "
                           f"expected {FRAME_SIZE}x{FRAME_SIZE}")
    return arr


def load_frame_pixels(frames_dir: Path) -> np.ndarray:
    """(50, 224, 224, 3) uint8 from frame_000.png ... frame_049.png."""
    files = sorted(frames_dir.glob("frame_*.png"))
    if len(files) != FRAMES_PER_CLIP:
        raise ExampleError(f"{frames_dir}: expected {FRAMES_PER_CLIP} frames, "
                           f"found {len(files)}")
    stack = np.empty((FRAMES_PER_CLIP, FRAME_SIZE, FRAME_SIZE, 3), dtype=np.uint8)
    for i, f in enumerate(files):
        stack[i] = _decode_frame(f)
    return stack


def load_frame_range(frames_dir: Path, start: int, stop: int) -> np.ndarray:
    """(stop-start, 224, 224, 3) uint8, loading only the named frames."""
    from .manifest import FRAME_PATTERN
    stack = np.empty((stop - start, FRAME_SIZE, FRAME_SIZE, 3), dtype=np.uint8)
    for i, idx in enumerate(range(start, stop)):
        path = frames_dir / FRAME_PATTERN.format(idx)
        if not path.exists():
            raise ExampleError(f"{frames_dir}: missing frame {path.name}")
        stack[i] = _decode_frame(path)
    return stack


def read_audio_10s(entry: ManifestEntry) -> AudioClip:
    try:
        clip = read_wav(entry.audio_path, expect_stereo=True)
    except AudioFileError as exc:
        raise ExampleError(f"{entry.example_id}: {exc}") from exc
    if clip.sample_rate != 44100:
        from ..frontend.resample import resample_48k_to_44k1
        clip = resample_48k_to_44k1(clip)
    if abs(clip.n_samples - SAMPLES_10S) > SAMPLE_TOLERANCE:
        raise ExampleError(f"{entry.example_id}: audio is {clip.n_samples} samples, "
                           f"expected {SAMPLES_10S} +- {SAMPLE_TOLERANCE}")
    if clip.n_samples != SAMPLES_10S:  # trim/pad the tolerance window
        left = np.zeros(SAMPLES_10S, dtype=clip.left.dtype)
        right = np.zeros(SAMPLES_10S, dtype=clip.right.dtype)
        n = min(clip.n_samples, SAMPLES_10S)
        left[:n], right[:n] = clip.left[:n], clip.right[:n]
        clip = AudioClip(left, right, 44100)
    return clip


def read_example(entry: ManifestEntry, normalization: str = "unit_range") -> AlignedExample:
    """Decode, duration-check and normalize one manifest entry."""
    clip = read_audio_10s(entry)
    pixels = load_frame_pixels(entry.frames_dir)
    frames = normalize_frames(pixels, normalization)
    return AlignedExample(entry=entry, clip=clip, frames=frames)
