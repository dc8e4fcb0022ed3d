"""Impulsiveness and cyclicity scoring of raw and filtered signals.

Provides the two figures of merit used to judge a candidate band filter --
kurtosis (impulsiveness) and the envelope-spectrum harmonic indicator
(cyclicity) -- plus the classical per-bin spectral-kurtosis band selector
used as a baseline, and the rule that picks the best filter among the
columns of a factor model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from .factorize import FactorModel
from .signals import Signal, _format_float
from .tfr import BandFilter, Spectrogram, StftConfig, _filter_frames, stft

DEFAULT_HARMONICS = 10
DEFAULT_TOL_BINS = 2


@dataclass(frozen=True)
class EnvelopeSpectrum:
    freq_axis: np.ndarray
    amplitudes: np.ndarray
    source_length: int


@dataclass(frozen=True)
class DiagnosticReport:
    """Scores for one filtered signal and the filter that produced them."""

    kurtosis: float
    envsi: float
    envelope: EnvelopeSpectrum
    selected_filter_index: int
    criterion: str
    band_filter: BandFilter


def kurtosis(signal) -> float:
    """Non-excess sample kurtosis m4 / m2^2 with biased central moments.

    Accepts a ``Signal`` or a plain sample array.  Scale- and
    shift-invariant; equals 3 for Gaussian data in expectation.
    """
    x = np.asarray(signal.samples if isinstance(signal, Signal) else signal, dtype=np.float64)
    if x.size < 4:
        raise ValueError("need at least 4 samples")
    centered = x - x.mean()
    m2 = np.mean(centered**2)
    if m2 <= 0:
        raise ValueError("degenerate signal: zero variance")
    m4 = np.mean(centered**4)
    return float(m4 / m2**2)


def envelope_spectrum(signal: Signal, f_max: float | None = None) -> EnvelopeSpectrum:
    """One-sided amplitude spectrum of the analytic-signal envelope.

    The envelope mean is removed before the transform so the harmonic
    content is not swamped by the DC term.  ``f_max`` truncates the axis.
    """
    x = signal.samples
    nyquist = signal.sample_rate / 2.0
    if f_max is None:
        f_max = nyquist
    if f_max > nyquist + 1e-9:
        raise ValueError("f_max exceeds the Nyquist frequency")
    envelope = np.abs(hilbert(x))
    envelope = envelope - envelope.mean()
    amplitudes = np.abs(np.fft.rfft(envelope)) * (2.0 / x.size)
    amplitudes[0] /= 2.0
    if x.size % 2 == 0:
        amplitudes[-1] /= 2.0
    freq_axis = np.fft.rfftfreq(x.size, 1.0 / signal.sample_rate)
    keep = freq_axis <= f_max + 1e-12
    return EnvelopeSpectrum(freq_axis[keep], amplitudes[keep], x.size)


def envsi(env: EnvelopeSpectrum, fault_freq: float,
          harmonics: int = DEFAULT_HARMONICS, tol_bins: int = DEFAULT_TOL_BINS) -> float:
    """Harmonic-comb energy fraction of the envelope spectrum, in [0, 1].

    Numerator: squared peak amplitude within ``tol_bins`` of each of the
    first ``harmonics`` multiples of ``fault_freq``.  Denominator: total
    squared amplitude over (0, (harmonics + 0.5) * fault_freq].
    """
    if harmonics < 1:
        raise ValueError("need at least one harmonic")
    if fault_freq <= 0:
        raise ValueError("fault_freq must be positive")
    freq = env.freq_axis
    cap = (harmonics + 0.5) * fault_freq
    if cap > freq[-1] + 1e-9:
        raise ValueError("envelope spectrum too short for the requested harmonics")
    if freq.size < 2:
        raise ValueError("envelope spectrum needs at least two bins")
    df = freq[1] - freq[0]
    # Disjoint harmonic windows keep the ratio bounded by 1.
    if tol_bins >= 0.5 * fault_freq / df:
        raise ValueError("tol_bins too wide: harmonic windows would overlap")

    amplitudes = env.amplitudes
    in_cap = (freq > 0) & (freq <= cap + 1e-12)
    denominator = float(np.sum(amplitudes[in_cap] ** 2))
    if denominator <= 0:
        raise ValueError("no envelope energy")
    numerator = 0.0
    for k in range(1, harmonics + 1):
        center = int(round(k * fault_freq / df))
        lo = max(center - tol_bins, 0)
        hi = min(center + tol_bins + 1, amplitudes.size)
        numerator += float(np.max(amplitudes[lo:hi]) ** 2)
    return numerator / denominator


def spectral_kurtosis(spec: Spectrogram) -> np.ndarray:
    """Per-bin kurtosis of the complex STFT coefficients, minus 2.

    Zero for stationary complex Gaussian content; positive where a bin
    carries transients.  Bins with no energy are set to 0.
    """
    if spec.n_frames < 8:
        raise ValueError("need at least 8 frames")
    power = spec.power
    m2 = power.mean(axis=1)
    m4 = (power**2).mean(axis=1)
    out = np.zeros(spec.n_bins)
    nonzero = m2 > 0
    out[nonzero] = m4[nonzero] / m2[nonzero] ** 2 - 2.0
    return out


def spectral_kurtosis_selector(spec: Spectrogram) -> BandFilter:
    """Band filter from clipped spectral kurtosis, normalized to unit max."""
    sk = np.maximum(spectral_kurtosis(spec), 0.0)
    if sk.max() <= 0:
        raise ValueError("no positive spectral kurtosis: nothing to select")
    return BandFilter(sk / sk.max(), spec.freq_axis, "unit_max")


def select_best_filter(signal: Signal, model: FactorModel, criterion: str,
                       fault_freq: float, stft_config: StftConfig,
                       harmonics: int = DEFAULT_HARMONICS,
                       tol_bins: int = DEFAULT_TOL_BINS,
                       envelope_f_max: float | None = None) -> DiagnosticReport:
    """Score every column of W as a band filter and keep the best.

    ``criterion`` is ``"kurtosis"`` (impulsiveness, Gaussian-noise setting)
    or ``"envsi"`` (cyclicity, impulsive-noise setting).  Ties and the
    scoring itself are deterministic; the lowest column index wins ties.
    Columns producing degenerate filtered signals are skipped.
    """
    if criterion not in ("kurtosis", "envsi"):
        raise ValueError(f"unknown criterion: {criterion}")
    if model.w.shape[0] != stft_config.n_bins:
        raise ValueError("factor model does not match the STFT configuration")
    if envelope_f_max is None:
        envelope_f_max = min((harmonics + 2.0) * fault_freq, signal.sample_rate / 2.0)

    spec = stft(signal, stft_config)
    best = None
    for index in range(model.w.shape[1]):
        response = model.w[:, index]
        if response.max() <= 0:
            continue
        band = BandFilter(response, spec.freq_axis, "unit_l2")
        filtered = _filter_frames(spec.frames, band, stft_config,
                                  signal.sample_rate, len(signal))
        try:
            kurt_value = kurtosis(filtered)
            env = envelope_spectrum(filtered, envelope_f_max)
            envsi_value = envsi(env, fault_freq, harmonics, tol_bins)
        except ValueError:
            continue
        score = kurt_value if criterion == "kurtosis" else envsi_value
        if best is None or score > best[0]:
            best = (score, index, kurt_value, envsi_value, env, band)
    if best is None:
        raise ValueError("all filter columns produced degenerate signals")
    _, index, kurt_value, envsi_value, env, band = best
    return DiagnosticReport(kurt_value, envsi_value, env, index, criterion,
                            band.as_unit_max())


def report_to_dict(report: DiagnosticReport) -> dict:
    return {
        "kurtosis": report.kurtosis,
        "envsi": report.envsi,
        "selected_filter_index": report.selected_filter_index,
        "criterion": report.criterion,
        "filter_energy_centroid_hz": report.band_filter.energy_centroid(),
    }


def save_report_json(report: DiagnosticReport, path) -> None:
    with open(str(path), "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_envelope_csv(env: EnvelopeSpectrum, path) -> None:
    with open(str(path), "w") as fh:
        fh.write("freq_hz,amplitude\n")
        for f, a in zip(env.freq_axis, env.amplitudes):
            fh.write(f"{_format_float(f)},{_format_float(a)}\n")


def save_filter_csv(band: BandFilter, path) -> None:
    with open(str(path), "w") as fh:
        fh.write("freq_hz,response\n")
        for f, r in zip(band.freq_axis, band.response):
            fh.write(f"{_format_float(f)},{_format_float(r)}\n")
