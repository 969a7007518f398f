"""Audio front-end: resampler, spectrogram framing, filterbanks, the
three-channel representation."""
import numpy as np
import pytest

from avscene.frontend import (AudioClip, AudioFileError, frame_count,
                              band_energies, erb_bandwidth, fft_bin_frequencies,
                              gammatone_matrix, hz_to_erb_number, make_rep,
                              mel_matrix, read_wav, resample_48k_to_44k1,
                              stft_power, write_wav)
from avscene.frontend.filterbanks import FilterbankError


class TestResample:
    def test_one_second_length(self):
        clip = AudioClip(np.zeros(48000), np.zeros(48000), 48000)
        out = resample_48k_to_44k1(clip)
        assert out.n_samples == 44100 and out.sample_rate == 44100

    def test_length_rounding(self):
        n = 48123
        clip = AudioClip(np.zeros(n), np.zeros(n), 48000)
        assert resample_48k_to_44k1(clip).n_samples == round(n * 44100 / 48000)

    def test_sine_preserved(self):
        t = np.arange(48000) / 48000.0
        sine = np.sin(2 * np.pi * 1000 * t)
        out = resample_48k_to_44k1(AudioClip(sine, sine, 48000)).left
        # FFT-peak oracle on an interior window
        n = 16384
        seg = out[4000:4000 + n] * np.hanning(n)
        spec = np.abs(np.fft.rfft(seg))
        peak_hz = spec.argmax() * 44100 / n
        assert abs(peak_hz - 1000) <= 44100 / n  # within one bin
        # passband amplitude within 0.1 dB
        rms_in = np.sqrt(np.mean(sine[4000:44000] ** 2))
        rms_out = np.sqrt(np.mean(out[4000:40000] ** 2))
        assert abs(20 * np.log10(rms_out / rms_in)) < 0.1

    def test_dc_preserved(self):
        clip = AudioClip(np.full(48000, 0.5), np.full(48000, 0.5), 48000)
        mid = resample_48k_to_44k1(clip).left[5000:39000]
        assert np.max(np.abs(mid - 0.5)) < 1e-3

    def test_rejects_other_rates(self):
        clip = AudioClip(np.zeros(1000), np.zeros(1000), 44100)
        assert resample_48k_to_44k1(clip) is clip  # pass-through
        with pytest.raises(AudioFileError):
            AudioClip(np.zeros(10), np.zeros(10), 22050)


class TestStft:
    def test_fifty_frames_per_second(self):
        assert frame_count(44100) == 50
        assert frame_count(441000) == 500
        assert stft_power(np.random.default_rng(0).standard_normal(44100)).shape \
            == (883, 50)

    def test_zero_input_zero_output(self):
        assert stft_power(np.zeros(44100)).max() == 0.0

    def test_1khz_bin_position(self):
        t = np.arange(44100) / 44100.0
        spec = stft_power(np.sin(2 * np.pi * 1000 * t))
        frame = spec[:, 25]
        # closed form: 1000 * 1764 / 44100 = 40
        assert frame.argmax() == 40
        # the Hann mainlobe (peak bin and its two neighbors) carries
        # essentially all the frame energy
        assert frame[39:42].sum() / frame.sum() > 0.99

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            stft_power(np.array([]))


def _hybrid_mel_oracle(f):
    """Independent restatement: linear to 1 kHz (slope 3/200 mel/Hz, the
    scale where 2595*log10(1 + f/700)-style warping goes linear at low
    frequency), then log steps of ln(6.4)/27 per mel."""
    f = np.asarray(f, dtype=np.float64)
    safe = np.maximum(f, 1e-12)
    out = np.where(f < 1000.0, f * 0.015,
                   15.0 + np.log(safe / 1000.0) * (27.0 / np.log(6.4)))
    return out


class TestMel:
    def test_centers_increasing_within_range(self):
        fb = mel_matrix()
        c = fb.center_frequencies
        assert np.all(np.diff(c) > 0)
        assert c[0] > 0 and c[-1] < 22050

    def test_flat_spectrum_all_bands_positive(self):
        fb = mel_matrix()
        assert np.all(fb.apply(np.ones((883, 1))) > 0)

    def test_centers_match_formula_oracle(self):
        fb = mel_matrix(n_bands=64, fmin=0.0, fmax=22050.0)
        mels = _hybrid_mel_oracle(fb.center_frequencies)
        want = np.linspace(_hybrid_mel_oracle(0.0), _hybrid_mel_oracle(22050.0), 66)[1:-1]
        assert np.allclose(mels, want, rtol=1e-6)

    def test_invalid_range(self):
        with pytest.raises(FilterbankError):
            mel_matrix(fmin=3000, fmax=1000)
        with pytest.raises(FilterbankError):
            mel_matrix(fmax=44100)


class TestGammatone:
    def test_erb_spacing(self):
        fb = gammatone_matrix()
        erbs = hz_to_erb_number(fb.center_frequencies)
        steps = np.diff(erbs)
        assert np.max(np.abs(steps - steps[0])) < 1e-9

    def test_unit_peak_at_nearest_bin(self):
        fb = gammatone_matrix()
        assert np.allclose(fb.weights.max(axis=1), 1.0)
        bins = fft_bin_frequencies()
        nearest = np.abs(bins[None, :] - fb.center_frequencies[:, None]).argmin(axis=1)
        assert np.array_equal(fb.weights.argmax(axis=1), nearest)

    def test_shape_and_monotone_peaks(self):
        fb = gammatone_matrix(n_bands=64)
        assert fb.weights.shape == (64, 883)
        assert np.all(np.diff(fb.weights.argmax(axis=1)) >= 0)
        assert np.all(fb.weights >= 0)

    def test_bandwidth_formula(self):
        assert abs(erb_bandwidth(1000.0) - 24.7 * (4.37 + 1)) < 1e-9


class TestMakeRep:
    def _clip(self, seconds=1, seed=0):
        rng = np.random.default_rng(seed)
        n = 44100 * seconds
        return AudioClip(rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, n), 44100)

    @pytest.mark.parametrize("kind", ["mel", "gammatone"])
    def test_one_second_shape(self, kind):
        rep = make_rep(self._clip(), kind)
        assert rep.values.shape == (64, 50, 3)
        assert rep.frame_rate == 50

    def test_ten_second_shape(self):
        assert make_rep(self._clip(seconds=10), "gammatone").values.shape \
            == (64, 500, 3)

    def test_identical_channels_difference_floor(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-0.5, 0.5, 44100)
        energies = band_energies(AudioClip(x, x.copy(), 44100), "mel")
        assert np.all(energies[:, :, 2] == 0.0)  # L - R is exactly zero

    def test_determinism_bitwise(self):
        a = make_rep(self._clip(seed=3), "gammatone").values
        b = make_rep(self._clip(seed=3), "gammatone").values
        assert a.tobytes() == b.tobytes()

    def test_energy_scales_quadratically(self):
        clip = self._clip(seed=9)
        doubled = AudioClip(clip.left * 2, clip.right * 2, 44100)
        e1 = band_energies(clip, "gammatone")
        e2 = band_energies(doubled, "gammatone")
        # c = 2 is exact in floating point through the linear pipeline
        assert np.array_equal(e2, 4.0 * e1)
        tripled = AudioClip(clip.left * 3, clip.right * 3, 44100)
        e3 = band_energies(tripled, "gammatone")
        assert np.allclose(e3, 9.0 * e1, rtol=1e-12)

    def test_slices_match_full_clip_away_from_boundaries(self):
        clip = self._clip(seconds=10, seed=11)
        full = make_rep(clip, "gammatone", standardize=False).values
        for k in (2, 7):
            window = make_rep(clip.slice_seconds(k, 1.0), "gammatone",
                              standardize=False).values
            # compare away from the reflect-pad boundary frames
            assert np.allclose(window[:, 2:48, :], full[:, 50 * k + 2:50 * k + 48, :],
                               rtol=1e-6, atol=1e-6)

    def test_rejects_unresampled_input(self):
        clip = AudioClip(np.zeros(48000), np.zeros(48000), 48000)
        with pytest.raises(AudioFileError, match="resample"):
            make_rep(clip, "mel")


class TestWavIO:
    def test_16bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        clip = AudioClip(rng.uniform(-0.9, 0.9, 44100),
                         rng.uniform(-0.9, 0.9, 44100), 44100)
        path = tmp_path / "x.wav"
        write_wav(path, clip)
        back = read_wav(path)
        assert back.sample_rate == 44100 and back.n_samples == 44100
        assert np.max(np.abs(back.left - clip.left)) < 1.0 / 32767

    def test_24bit_read(self, tmp_path):
        import wave
        rng = np.random.default_rng(1)
        x = rng.uniform(-0.9, 0.9, 1000)
        ints = np.clip(np.round(x * (1 << 23)), -(1 << 23), (1 << 23) - 1).astype(np.int64)
        frames = bytearray()
        for v in ints:
            u = int(v) & 0xFFFFFF
            frames += bytes([u & 0xFF, (u >> 8) & 0xFF, (u >> 16) & 0xFF]) * 2
        path = tmp_path / "deep.wav"
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(2)
            wf.setsampwidth(3)
            wf.setframerate(44100)
            wf.writeframes(bytes(frames))
        clip = read_wav(path)
        assert np.max(np.abs(clip.left - x)) < 1e-6

    def test_mono_rejected_when_stereo_expected(self, tmp_path):
        import wave
        path = tmp_path / "mono.wav"
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(44100)
            wf.writeframes(b"\x00\x00" * 100)
        with pytest.raises(AudioFileError, match="stereo"):
            read_wav(path)
