import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandsift.signals import (
    NoiseSpec,
    Signal,
    SoiSpec,
    generate_noise,
    generate_soi,
    load_signal,
    machine_response_gain,
    mix,
    save_signal,
    soi_half_power_bandwidth,
    soi_onset_times,
    soi_spectral_profile,
)
from bandsift.diagnostics import kurtosis

FS = 25000.0


def soi_spec(**kw):
    base = dict(amplitude=3.0, carrier_freq=2500.0, damping=1000.0,
                fault_freq=30.0, duration=1.0)
    base.update(kw)
    return SoiSpec(**base)


class TestGenerateSoi:
    def test_zero_amplitude_gives_zero_signal(self):
        s = generate_soi(soi_spec(amplitude=0.0), FS)
        assert np.all(s.samples == 0.0)

    def test_onset_count_and_spacing(self):
        # 30 Hz fault over 1 s: onsets at m/30 for m = 0..29.
        onsets = soi_onset_times(soi_spec())
        assert len(onsets) == 30
        assert np.allclose(np.diff(onsets), 1.0 / 30.0)

    def test_single_impulse_value_one_time_constant_after_onset(self):
        # One onset at t=0; sample exactly at t = 1/damping.
        spec = soi_spec(amplitude=3.0, carrier_freq=2530.0, damping=100.0,
                        fault_freq=1.0, duration=0.9, phase=0.7)
        s = generate_soi(spec, FS)
        idx = int(round(FS / spec.damping))  # 250 samples = 10 ms
        expected = 3.0 * math.exp(-1.0) * math.sin(
            2.0 * math.pi * spec.carrier_freq / spec.damping + spec.phase)
        assert abs(s.samples[idx] - expected) < 1e-9

    def test_matches_per_sample_reference(self):
        # Independent brute-force evaluation of the damped-sinusoid train.
        spec = soi_spec(duration=0.2, fault_freq=50.0, damping=400.0, phase=0.3,
                        carrier_freq=1200.0)
        fs = 5000.0
        s = generate_soi(spec, fs)
        n = int(round(spec.duration * fs))
        ref = np.zeros(n)
        for i in range(n):
            t = i / fs
            m = 0
            while m / spec.fault_freq < spec.duration:
                tau = t - m / spec.fault_freq
                if tau >= 0:
                    ref[i] += spec.amplitude * math.exp(-spec.damping * tau) * math.sin(
                        2 * math.pi * spec.carrier_freq * tau + spec.phase)
                m += 1
        assert np.allclose(s.samples, ref, rtol=1e-12, atol=1e-12)

    def test_deterministic(self):
        a = generate_soi(soi_spec(), FS)
        b = generate_soi(soi_spec(), FS)
        assert np.array_equal(a.samples, b.samples)

    def test_rejects_carrier_at_nyquist(self):
        with pytest.raises(ValueError):
            generate_soi(soi_spec(carrier_freq=FS / 2), FS)

    def test_rejects_nonpositive_duration(self):
        with pytest.raises(ValueError):
            soi_spec(duration=0.0)

    def test_power_spectrum_peaks_at_carrier(self):
        # Damping * period = 1000/30 >> 3: the averaged spectrum taken at the
        # toolkit's own resolution must peak within one bin of the carrier.
        spec = soi_spec(duration=2.0)
        s = generate_soi(spec, FS)
        nfft = 512
        seg = s.samples[: len(s.samples) // nfft * nfft].reshape(-1, nfft)
        power = (np.abs(np.fft.rfft(seg * np.hamming(nfft), axis=1)) ** 2).mean(axis=0)
        freqs = np.fft.rfftfreq(nfft, 1.0 / FS)
        peak = freqs[np.argmax(power)]
        assert abs(peak - spec.carrier_freq) <= FS / nfft


class TestGenerateNoise:
    def test_all_zero_when_silent(self):
        s = generate_noise(NoiseSpec(0.0), 0.5, FS)
        assert np.all(s.samples == 0.0)

    def test_gaussian_moments(self):
        s = generate_noise(NoiseSpec(1.0, seed=11), 40.0, FS)
        assert len(s) == 10**6
        assert 0.995 <= s.samples.std() <= 1.005
        assert 2.95 <= kurtosis(s) <= 3.05

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            NoiseSpec(-0.1)

    def test_seed_determinism_and_decorrelation(self):
        a = generate_noise(NoiseSpec(1.0, seed=3), 4.0, FS)
        b = generate_noise(NoiseSpec(1.0, seed=3), 4.0, FS)
        c = generate_noise(NoiseSpec(1.0, seed=4), 4.0, FS)
        assert np.array_equal(a.samples, b.samples)
        corr = np.corrcoef(a.samples, c.samples)[0, 1]
        assert abs(corr) < 0.01

    def test_components_sum_to_mixture(self):
        spec = NoiseSpec(0.5, impulse_max_amplitude=15.0, impulse_carrier_freq=6000.0,
                         impulse_rate=4.0, seed=5)
        combined = generate_noise(spec, 1.0, FS)
        gauss_only = generate_noise(NoiseSpec(0.5, seed=5), 1.0, FS)
        imp_only = generate_noise(
            NoiseSpec(0.0, impulse_max_amplitude=15.0, impulse_carrier_freq=6000.0,
                      impulse_rate=4.0, seed=5), 1.0, FS)
        assert np.array_equal(combined.samples, gauss_only.samples + imp_only.samples)

    def test_impulse_energy_concentrates_at_carrier(self):
        # Impulses-only component: spectrogram energy piles up near 6 kHz.
        from bandsift.tfr import StftConfig, stft
        spec = NoiseSpec(0.0, impulse_max_amplitude=15.0, impulse_carrier_freq=6000.0,
                         impulse_rate=8.0, seed=2)
        s = generate_noise(spec, 2.0, FS)
        sg = stft(s, StftConfig())
        row_energy = sg.power.sum(axis=1)
        band = (sg.freq_axis >= 5500) & (sg.freq_axis <= 6500)
        assert row_energy[band].sum() / row_energy.sum() > 0.5

    def test_machine_response_coloring(self):
        spec = NoiseSpec(1.0, machine_response=(4000.0, 5.0), seed=9)
        s = generate_noise(spec, 4.0, FS)
        amp = np.abs(np.fft.rfft(s.samples))
        freqs = np.fft.rfftfreq(len(s), 1.0 / FS)
        near = amp[(freqs > 3800) & (freqs < 4200)].mean()
        far = amp[(freqs > 10000) & (freqs < 11000)].mean()
        assert near > 3 * far

    def test_machine_response_gain_unity_at_center(self):
        gain = machine_response_gain(np.array([0.0, 4000.0]), 4000.0, 5.0)
        assert gain[0] == 0.0
        assert abs(gain[1] - 1.0) < 1e-12


class TestMix:
    def test_additive_identity(self):
        s = generate_soi(soi_spec(), FS)
        zero = Signal(np.zeros(len(s)), FS)
        assert np.array_equal(mix([s, zero]).samples, s.samples)

    def test_cancellation(self):
        s = generate_soi(soi_spec(), FS)
        neg = Signal(-s.samples, FS)
        assert np.allclose(mix([s, neg]).samples, 0.0)

    def test_rejects_mismatch(self):
        a = Signal(np.ones(10), FS)
        with pytest.raises(ValueError):
            mix([a, Signal(np.ones(11), FS)])
        with pytest.raises(ValueError):
            mix([a, Signal(np.ones(10), FS / 2)])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_commutative_and_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (Signal(rng.standard_normal(64), FS) for _ in range(3))
        ab_c = mix([mix([a, b]), c]).samples
        a_bc = mix([a, mix([b, c])]).samples
        ba_c = mix([mix([b, a]), c]).samples
        assert np.allclose(ab_c, a_bc, rtol=1e-12, atol=1e-12)
        assert np.array_equal(ab_c, ba_c)

    def test_masked_impulses_keep_gaussian_kurtosis(self):
        # Strong noise hides the A=3 impulse train: raw kurtosis stays
        # near-Gaussian for every seed.
        spec = soi_spec(duration=2.5)
        soi = generate_soi(spec, FS)
        for seed in range(20):
            noisy = mix([soi, generate_noise(NoiseSpec(2.0, seed=seed), 2.5, FS)])
            assert 2.8 <= kurtosis(noisy) <= 3.6


class TestSpectralProfile:
    def test_peak_value(self):
        spec = soi_spec()
        prof = soi_spectral_profile(spec, np.array([spec.carrier_freq]))
        expected = spec.amplitude**2 / (8.0 * math.pi * spec.damping**2)
        assert abs(prof[0] - expected) < 1e-15

    def test_half_power_points(self):
        # At +-B/2 the profile, used as an amplitude response, carries half
        # power: value = peak / sqrt(2).
        spec = soi_spec()
        b = soi_half_power_bandwidth(spec)
        f = np.array([spec.carrier_freq - b / 2, spec.carrier_freq, spec.carrier_freq + b / 2])
        prof = soi_spectral_profile(spec, f)
        assert abs(prof[0] - prof[1] / math.sqrt(2.0)) < 1e-9
        assert abs(prof[2] - prof[1] / math.sqrt(2.0)) < 1e-9

    def test_even_symmetry_about_carrier(self):
        spec = soi_spec()
        for delta in (10.0, 137.0, 1000.0):
            lo, hi = soi_spectral_profile(
                spec, np.array([spec.carrier_freq - delta, spec.carrier_freq + delta]))
            assert abs(lo - hi) < 1e-18

    def test_rejects_unsorted_axis(self):
        with pytest.raises(ValueError):
            soi_spectral_profile(soi_spec(), np.array([100.0, 50.0]))


class TestSignalIO:
    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("sample_rate=48000.0\n" + "\n".join(str(i) for i in range(10)) + "\n")
        s = load_signal(path)
        assert len(s) == 10 and s.sample_rate == 48000.0

    def test_csv_empty_body(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("sample_rate=48000\n")
        with pytest.raises(ValueError, match="empty signal"):
            load_signal(path)

    def test_csv_bad_header(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("rate=48000\n1.0\n")
        with pytest.raises(ValueError, match="header"):
            load_signal(path)

    def test_csv_nonfinite(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("sample_rate=48000\n1.0\nnan\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_signal(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_signal(tmp_path / "absent.wav")

    def test_wav_float_round_trip(self, tmp_path):
        s = generate_soi(soi_spec(), FS)
        path = tmp_path / "sig.wav"
        save_signal(s, path)
        back = load_signal(path)
        assert back.sample_rate == FS
        scale = np.max(np.abs(s.samples))
        assert np.allclose(back.samples, s.samples, atol=scale * 2**-23)

    def test_wav_pcm16_round_trip(self, tmp_path):
        s = generate_soi(soi_spec(), FS)
        unit = Signal(s.samples / np.max(np.abs(s.samples)), FS)
        path = tmp_path / "sig16.wav"
        save_signal(unit, path, encoding="pcm16")
        back = load_signal(path)
        assert np.allclose(back.samples, unit.samples, atol=2**-15)

    def test_written_csv_is_parseable(self, tmp_path):
        s = generate_noise(NoiseSpec(1.0, seed=0), 0.01, FS)
        path = tmp_path / "noise.csv"
        save_signal(s, path, fmt="csv")
        back = load_signal(path)
        assert np.array_equal(back.samples, s.samples)


class TestSignalInvariants:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Signal(np.array([]), FS)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Signal(np.array([1.0, np.inf]), FS)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Signal(np.ones(4), 0.0)

    def test_soi_spec_invariants(self):
        with pytest.raises(ValueError):
            soi_spec(damping=0.0)
        with pytest.raises(ValueError):
            soi_spec(fault_freq=0.0)
        with pytest.raises(ValueError):
            soi_spec(fault_freq=3000.0)  # above carrier
        with pytest.raises(ValueError):
            soi_spec(amplitude=-1.0)
