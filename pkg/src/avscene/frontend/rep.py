"""Three-channel time-frequency representation of a stereo clip.

For each of left, right and difference (L-R) signals: power spectrogram,
filterbank projection, log compression ``log(x + 1e-10)``, then per-clip
standardization to zero mean / unit variance per channel. One second of
44.1 kHz audio yields (64 bands, 50 frames, 3 channels).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filterbanks import FilterbankMatrix, gammatone_matrix, mel_matrix
from .stft import stft_power
from .wavio import AudioClip, AudioFileError

LOG_FLOOR = 1e-10
FRAME_RATE = 50
_STD_FLOOR = 1e-8

_MATRIX_CACHE: dict[str, FilterbankMatrix] = {}


@dataclass
class AudioRep:
    """(64, T, 3) tensor; channels are left, right, difference."""
    values: np.ndarray
    frame_rate: int = FRAME_RATE
    filterbank: str = "gammatone"

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise ValueError(f"representation must be (bands, T, 3), got "
                             f"{self.values.shape}")

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    def slice_seconds(self, start_s: float, duration_s: float) -> "AudioRep":
        a = int(round(start_s * self.frame_rate))
        b = a + int(round(duration_s * self.frame_rate))
        return AudioRep(np.ascontiguousarray(self.values[:, a:b, :]),
                        self.frame_rate, self.filterbank)


def filterbank_for(kind: str) -> FilterbankMatrix:
    fb = _MATRIX_CACHE.get(kind)
    if fb is None:
        if kind == "mel":
            fb = mel_matrix()
        elif kind == "gammatone":
            fb = gammatone_matrix()
        else:
            raise ValueError(f"unknown filterbank kind {kind!r}")
        _MATRIX_CACHE[kind] = fb
    return fb


def band_energies(clip: AudioClip, kind: str) -> np.ndarray:
    """Pre-log (64, T, 3) filterbank energies; quadratic in the waveform."""
    if clip.sample_rate != 44100:
        raise AudioFileError(f"representation expects 44100 Hz input, got "
                             f"{clip.sample_rate} (resample first)")
    fb = filterbank_for(kind)
    channels = (clip.left, clip.right, clip.left - clip.right)
    return np.stack([fb.apply(stft_power(ch)) for ch in channels], axis=2)


def make_rep(clip: AudioClip, kind: str = "gammatone",
             standardize: bool = True) -> AudioRep:
    energies = band_energies(clip, kind)
    logged = np.log(energies + LOG_FLOOR)
    if standardize:
        mean = logged.mean(axis=(0, 1), keepdims=True)
        std = logged.std(axis=(0, 1), keepdims=True)
        logged = (logged - mean) / np.maximum(std, _STD_FLOOR)
    return AudioRep(np.ascontiguousarray(logged.astype(np.float32)),
                    FRAME_RATE, kind)


# -- on-disk format for extracted features (raw arrays + JSON sidecar) -----

def save_rep(path: str | Path, rep: AudioRep) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(rep.values).astype("<f4")
    path.with_suffix(".bin").write_bytes(arr.tobytes())
    sidecar = {
        "shape": list(rep.values.shape),
        "dtype": "float32",
        "frame_rate": rep.frame_rate,
        "filterbank": rep.filterbank,
        "log_floor": LOG_FLOOR,
        "standardized": True,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1, sort_keys=True))


def load_rep(path: str | Path) -> AudioRep:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f4")
    values = raw.reshape(sidecar["shape"]).astype(np.float32, copy=True)
    return AudioRep(values, sidecar["frame_rate"], sidecar["filterbank"])
