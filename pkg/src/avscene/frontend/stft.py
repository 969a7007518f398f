"""Power spectrogram framing.

40 ms Hann windows (1764 samples at 44.1 kHz) with 50% overlap (hop 882)
over a reflect-padded signal. The pad of (window - hop) / 2 = 441 samples
per side makes one second of audio produce exactly 50 frames: frames =
(n + 2*441 - 1764) // 882 + 1 = n // 882 when the hop divides n.
"""
from __future__ import annotations

import numpy as np

SAMPLE_RATE = 44100
WINDOW = 1764   # 40 ms
HOP = 882       # 50% overlap
PAD = (WINDOW - HOP) // 2
N_BINS = WINDOW // 2 + 1  # one-sided spectrum: 883


def frame_count(n_samples: int) -> int:
    return (n_samples + 2 * PAD - WINDOW) // HOP + 1


def stft_power(samples: np.ndarray) -> np.ndarray:
    """(n,) waveform -> (883, T) one-sided power spectrogram |FFT|^2."""
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError(f"stft_power expects a non-empty 1-d signal, got shape "
                         f"{samples.shape}")
    if samples.size < WINDOW - 2 * PAD:
        raise ValueError(f"signal of {samples.size} samples is shorter than one "
                         f"{WINDOW - 2 * PAD}-sample hop-aligned window")
    x = np.pad(samples.astype(np.float64), PAD, mode="reflect")
    t = frame_count(samples.size)
    idx = np.arange(WINDOW)[None, :] + HOP * np.arange(t)[:, None]
    frames = x[idx] * np.hanning(WINDOW)
    spec = np.fft.rfft(frames, axis=1)
    return np.ascontiguousarray((spec.real ** 2 + spec.imag ** 2).T)
