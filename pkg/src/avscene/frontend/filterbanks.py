"""Mel and gammatone filterbank matrices over the one-sided FFT bins.

Both constructions return a (64, 883) nonnegative weight matrix for the
1764-point spectrum at 44.1 kHz.

Mel: Slaney-convention scale (linear below 1 kHz, logarithmic above),
triangular filters between successive scale points, each filter
area-normalized by 2 / (f_upper - f_lower).

Gammatone: 64 center frequencies equally spaced on the ERB-number scale
(Glasberg-Moore, ERB(f) = 24.7 * (4.37 f / 1000 + 1)), each row the
symmetric fourth-order gammatone magnitude response (1 + ((f - cf) / b)^2)
^ -2 with b = 1.019 * ERB(cf), scaled to unit maximum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stft import N_BINS, SAMPLE_RATE, WINDOW

N_BANDS = 64

# Slaney mel-scale constants: linear region slope 3/200, log step ln(6.4)/27
_MEL_BREAK_HZ = 1000.0
_MEL_BREAK = _MEL_BREAK_HZ * 3.0 / 200.0
_MEL_LOGSTEP = np.log(6.4) / 27.0


class FilterbankError(ValueError):
    pass


@dataclass
class FilterbankMatrix:
    weights: np.ndarray           # (n_bands, n_bins), nonnegative
    kind: str                     # "mel" | "gammatone"
    center_frequencies: np.ndarray  # strictly increasing, Hz

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise FilterbankError("filterbank weights must be nonnegative")
        if np.any(np.diff(self.center_frequencies) <= 0):
            raise FilterbankError("band centers must be strictly increasing")
        if not np.all(self.weights.max(axis=1) > 0):
            raise FilterbankError("every band needs at least one positive weight")

    def apply(self, power_spec: np.ndarray) -> np.ndarray:
        """(n_bins, T) power spectrogram -> (n_bands, T) band energies."""
        return self.weights @ power_spec


def hz_to_mel(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    linear = f * 3.0 / 200.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logpart = _MEL_BREAK + np.log(np.maximum(f, 1e-30) / _MEL_BREAK_HZ) / _MEL_LOGSTEP
    return np.where(f < _MEL_BREAK_HZ, linear, logpart)


def mel_to_hz(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    linear = m * 200.0 / 3.0
    logpart = _MEL_BREAK_HZ * np.exp(_MEL_LOGSTEP * (m - _MEL_BREAK))
    return np.where(m < _MEL_BREAK, linear, logpart)


def _check_range(fmin: float, fmax: float, n_bands: int) -> None:
    if n_bands < 1:
        raise FilterbankError(f"need at least one band, got {n_bands}")
    if not 0 <= fmin < fmax <= SAMPLE_RATE / 2:
        raise FilterbankError(f"invalid frequency range [{fmin}, {fmax}] for "
                              f"Nyquist {SAMPLE_RATE / 2}")


def fft_bin_frequencies() -> np.ndarray:
    return np.arange(N_BINS) * (SAMPLE_RATE / WINDOW)


def mel_matrix(n_bands: int = N_BANDS, fmin: float = 0.0,
               fmax: float = SAMPLE_RATE / 2) -> FilterbankMatrix:
    _check_range(fmin, fmax, n_bands)
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2))
    bins = fft_bin_frequencies()
    weights = np.zeros((n_bands, N_BINS))
    for i in range(n_bands):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (bins - lo) / (center - lo)
        down = (hi - bins) / (hi - center)
        tri = np.maximum(0.0, np.minimum(up, down))
        weights[i] = tri * (2.0 / (hi - lo))  # Slaney area norm
    return FilterbankMatrix(weights, "mel", edges[1:-1].copy())


def erb_bandwidth(f) -> np.ndarray:
    return 24.7 * (4.37 * np.asarray(f, dtype=np.float64) / 1000.0 + 1.0)


def hz_to_erb_number(f) -> np.ndarray:
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=np.float64))


def erb_number_to_hz(e) -> np.ndarray:
    return (np.power(10.0, np.asarray(e, dtype=np.float64) / 21.4) - 1.0) / 0.00437


def gammatone_matrix(n_bands: int = N_BANDS, fmin: float = 20.0,
                     fmax: float = SAMPLE_RATE / 2) -> FilterbankMatrix:
    _check_range(fmin, fmax, n_bands)
    centers = erb_number_to_hz(np.linspace(hz_to_erb_number(fmin),
                                           hz_to_erb_number(fmax), n_bands))
    bins = fft_bin_frequencies()
    weights = np.zeros((n_bands, N_BINS))
    for i, cf in enumerate(centers):
        b = 1.019 * erb_bandwidth(cf)
        response = (1.0 + ((bins - cf) / b) ** 2) ** -2.0
        weights[i] = response / response.max()
    return FilterbankMatrix(weights, "gammatone", centers)
