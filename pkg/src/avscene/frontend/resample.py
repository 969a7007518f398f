"""48 kHz -> 44.1 kHz polyphase resampling.

The anti-alias filter is a Kaiser-windowed sinc (beta=14.77, 64
zero-crossings per side at the output Nyquist) applied at the upsampled
rate through ``scipy.signal.upfirdn``; 48000/44100 reduces to the integer
ratio 160/147.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import upfirdn

from .wavio import AudioClip, AudioFileError

UP = 147
DOWN = 160
KAISER_BETA = 14.77
ZERO_CROSSINGS = 64


def _kaiser_sinc_filter() -> np.ndarray:
    # cutoff at the tighter Nyquist (the 44.1 kHz output side)
    cutoff = 1.0 / max(UP, DOWN)
    half = ZERO_CROSSINGS * max(UP, DOWN)
    n = np.arange(-half, half + 1)
    taps = cutoff * np.sinc(cutoff * n) * np.kaiser(2 * half + 1, KAISER_BETA)
    return taps * UP  # compensate the 1/up energy spread of zero-stuffing


_FILTER: np.ndarray | None = None


def resample_48k_to_44k1(clip: AudioClip) -> AudioClip:
    """Length maps to round(n * 44100 / 48000); a 44.1 kHz clip passes through."""
    global _FILTER
    if clip.sample_rate == 44100:
        return clip
    if clip.sample_rate != 48000:
        raise AudioFileError(f"resampler expects 48000 Hz input, got {clip.sample_rate}")
    if _FILTER is None:
        _FILTER = _kaiser_sinc_filter()
    taps = _FILTER
    # group delay at the upsampled rate; divisible by DOWN for these constants,
    # so output sample k lives at upfirdn index half/DOWN + k
    half = (len(taps) - 1) // 2
    start, rem = divmod(half, DOWN)
    assert rem == 0
    out_len = int(round(clip.n_samples * UP / DOWN))

    def one(channel: np.ndarray) -> np.ndarray:
        tail = np.zeros(half // UP + 1, dtype=channel.dtype)
        y = upfirdn(taps, np.concatenate([channel, tail]), up=UP, down=DOWN)
        return np.ascontiguousarray(y[start:start + out_len])

    return AudioClip(one(clip.left), one(clip.right), 44100)
