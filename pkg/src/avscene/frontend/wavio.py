"""RIFF WAV reading and writing (16/24-bit PCM).

Samples are exchanged as float arrays in [-1, 1]; stereo files map to the
:class:`AudioClip` domain type.
"""
from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SUPPORTED_RATES = (48000, 44100)


class AudioFileError(RuntimeError):
    pass


@dataclass
class AudioClip:
    """Stereo PCM in [-1, 1] at 48 kHz or 44.1 kHz."""
    left: np.ndarray
    right: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise AudioFileError(f"channel lengths differ: {self.left.shape[0]} "
                                 f"vs {self.right.shape[0]}")
        if self.sample_rate not in SUPPORTED_RATES:
            raise AudioFileError(f"unsupported sample rate {self.sample_rate}, "
                                 f"expected one of {SUPPORTED_RATES}")

    @property
    def n_samples(self) -> int:
        return self.left.shape[0]

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate

    def slice_seconds(self, start: float, duration: float) -> "AudioClip":
        a = int(round(start * self.sample_rate))
        b = a + int(round(duration * self.sample_rate))
        if a < 0 or b > self.n_samples:
            raise AudioFileError(f"slice [{start}, {start + duration}) s outside clip "
                                 f"of {self.duration_seconds:.2f} s")
        return AudioClip(self.left[a:b], self.right[a:b], self.sample_rate)


def _decode_pcm(raw: bytes, sampwidth: int, n_channels: int) -> np.ndarray:
    if sampwidth == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif sampwidth == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3)
        ints = (b[:, 0].astype(np.int32)
                | (b[:, 1].astype(np.int32) << 8)
                | (b[:, 2].astype(np.int32) << 16))
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        data = ints.astype(np.float64) / float(1 << 23)
    else:
        raise AudioFileError(f"unsupported sample width {8 * sampwidth} bits "
                             "(16/24-bit PCM only)")
    return data.reshape(-1, n_channels)


def read_wav(path: str | Path, expect_stereo: bool = True) -> AudioClip:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioFileError(f"corrupt or non-PCM WAV file {path}: {exc}") from exc
    if expect_stereo and n_channels != 2:
        raise AudioFileError(f"{path}: expected stereo, got {n_channels} channel(s)")
    frames = _decode_pcm(raw, sampwidth, n_channels)
    if n_channels == 1:
        return AudioClip(frames[:, 0], frames[:, 0].copy(), rate)
    return AudioClip(np.ascontiguousarray(frames[:, 0]),
                     np.ascontiguousarray(frames[:, 1]), rate)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    """16-bit stereo PCM writer (the project's on-disk contract).

    Scale matches the reader (1/32768) so a round trip is exact to half an
    LSB away from full scale.
    """
    stacked = np.stack([clip.left, clip.right], axis=1)
    ints = np.clip(np.round(stacked * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(ints.tobytes())
