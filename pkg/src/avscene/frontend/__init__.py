from .filterbanks import (FilterbankError, FilterbankMatrix, erb_bandwidth,
                          fft_bin_frequencies, gammatone_matrix, hz_to_erb_number,
                          hz_to_mel, mel_matrix, mel_to_hz)
from .rep import AudioRep, band_energies, filterbank_for, load_rep, make_rep, save_rep
from .resample import resample_48k_to_44k1
from .stft import HOP, N_BINS, PAD, SAMPLE_RATE, WINDOW, frame_count, stft_power
from .wavio import AudioClip, AudioFileError, read_wav, write_wav

__all__ = [
    "AudioClip", "AudioFileError", "read_wav", "write_wav",
    "resample_48k_to_44k1",
    "stft_power", "frame_count", "SAMPLE_RATE", "WINDOW", "HOP", "PAD", "N_BINS",
    "FilterbankMatrix", "FilterbankError", "mel_matrix", "gammatone_matrix",
    "hz_to_mel", "mel_to_hz", "hz_to_erb_number", "erb_bandwidth",
    "fft_bin_frequencies",
    "AudioRep", "make_rep", "band_energies", "filterbank_for",
    "save_rep", "load_rep",
]
