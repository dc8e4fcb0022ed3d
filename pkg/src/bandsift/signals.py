"""Synthetic test signals and signal file I/O.

Generates the simulated diagnostic signals used throughout the toolkit: a
periodic train of damped sinusoids (the cyclic impulsive component produced
by a local bearing defect), Gaussian background noise, and optional
non-Gaussian impulsive disturbances at a separate carrier frequency.
Real recordings are read from WAV or a simple CSV format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

TWO_PI = 2.0 * np.pi

# Decay rate of a non-Gaussian disturbance burst, chosen so a burst rings
# for roughly 2 ms (amplitude below 5% after 3 time constants).
IMPULSE_DECAY = 1500.0

DEFAULT_SAMPLE_RATE = 25000.0
DEFAULT_DURATION = 2.5
DEFAULT_IMPULSE_RATE = 4.0


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real-valued time series."""

    samples: np.ndarray
    sample_rate: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class SoiSpec:
    """Parameters of the cyclic impulsive component (signal of interest).

    Each impulse is a damped sinusoid ``A * exp(-damping*t) *
    sin(2*pi*carrier_freq*t + phase)`` restarted every ``1/fault_freq``
    seconds; impulse tails superpose.
    """

    amplitude: float
    carrier_freq: float
    damping: float
    fault_freq: float
    duration: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.damping <= 0:
            raise ValueError("damping must be positive")
        if self.fault_freq <= 0:
            raise ValueError("fault_freq must be positive")
        if self.fault_freq >= self.carrier_freq:
            raise ValueError("fault_freq must be below carrier_freq")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of the disturbance mixture.

    ``gaussian_sigma`` sets the white Gaussian floor.  When
    ``impulse_max_amplitude > 0``, non-Gaussian bursts (damped sinusoids at
    ``impulse_carrier_freq``) arrive as a homogeneous Poisson process at
    ``impulse_rate`` per second with amplitudes uniform in
    ``(0, impulse_max_amplitude]``.  ``machine_response`` optionally colors
    the Gaussian part with a band-pass resonance ``(center_freq, quality)``.
    """

    gaussian_sigma: float
    impulse_max_amplitude: float = 0.0
    impulse_carrier_freq: float = 6000.0
    impulse_rate: float = DEFAULT_IMPULSE_RATE
    machine_response: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if self.impulse_max_amplitude < 0:
            raise ValueError("impulse_max_amplitude must be >= 0")
        if self.impulse_rate < 0:
            raise ValueError("impulse_rate must be >= 0")
        if self.machine_response is not None:
            center, quality = self.machine_response
            if center <= 0 or quality <= 0:
                raise ValueError("machine_response must have positive center and quality")


def soi_onset_times(spec: SoiSpec) -> np.ndarray:
    """Impulse onset instants within the signal duration."""
    n_onsets = math.ceil(spec.fault_freq * spec.duration)
    onsets = np.arange(n_onsets) / spec.fault_freq
    return onsets[onsets < spec.duration]


def generate_soi(spec: SoiSpec, sample_rate: float) -> Signal:
    """Generate the cyclic impulsive component.

    Deterministic: the output is fully defined by ``spec``.  Impulse tails
    extend to the end of the signal, so closely spaced onsets superpose.
    """
    if spec.carrier_freq >= sample_rate / 2:
        raise ValueError("carrier_freq must be below the Nyquist frequency")
    n = int(round(spec.duration * sample_rate))
    if n < 1:
        raise ValueError("duration too short for one sample")
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    if spec.amplitude > 0:
        for onset in soi_onset_times(spec):
            start = int(math.ceil(onset * sample_rate - 1e-9))
            tau = t[start:] - onset
            out[start:] += spec.amplitude * np.exp(-spec.damping * tau) * np.sin(
                TWO_PI * spec.carrier_freq * tau + spec.phase
            )
    return Signal(out, sample_rate, label="soi")


def machine_response_gain(freqs: np.ndarray, center: float, quality: float) -> np.ndarray:
    """Band-pass resonance magnitude response with unit gain at the center."""
    f = np.asarray(freqs, dtype=np.float64)
    num = center * f
    den = quality * np.sqrt((center**2 - f**2) ** 2 + (f * center / quality) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(den > 0, num / den, 0.0)
    return gain


def generate_noise(spec: NoiseSpec, duration: float, sample_rate: float) -> Signal:
    """Generate the disturbance mixture for a given seed.

    The Gaussian floor is drawn first and the burst process second, always in
    the same order, so the Gaussian-only and impulses-only variants of the
    same spec sum exactly to the combined signal.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if spec.impulse_max_amplitude > 0 and spec.impulse_carrier_freq >= sample_rate / 2:
        raise ValueError("impulse_carrier_freq must be below the Nyquist frequency")
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(spec.seed)

    gauss = spec.gaussian_sigma * rng.standard_normal(n)
    if spec.machine_response is not None:
        center, quality = spec.machine_response
        gain = machine_response_gain(np.fft.rfftfreq(n, 1.0 / sample_rate), center, quality)
        gauss = np.fft.irfft(np.fft.rfft(gauss) * gain, n=n)

    out = gauss
    if spec.impulse_max_amplitude > 0 and spec.impulse_rate > 0:
        t = np.arange(n) / sample_rate
        count = int(rng.poisson(spec.impulse_rate * duration))
        arrivals = rng.uniform(0.0, duration, count)
        amplitudes = spec.impulse_max_amplitude * (1.0 - rng.random(count))
        phases = rng.uniform(0.0, TWO_PI, count)
        bursts = np.zeros(n)
        for arrival, amp, phase in zip(arrivals, amplitudes, phases):
            start = int(math.ceil(arrival * sample_rate - 1e-9))
            tau = t[start:] - arrival
            bursts[start:] += amp * np.exp(-IMPULSE_DECAY * tau) * np.sin(
                TWO_PI * spec.impulse_carrier_freq * tau + phase
            )
        out = out + bursts
    return Signal(out, sample_rate, label="noise")


def mix(signals: list[Signal]) -> Signal:
    """Elementwise sum of signals sharing length and sample rate."""
    if not signals:
        raise ValueError("nothing to mix")
    first = signals[0]
    for s in signals[1:]:
        if len(s) != len(first):
            raise ValueError("length mismatch in mix")
        if s.sample_rate != first.sample_rate:
            raise ValueError("sample_rate mismatch in mix")
    total = np.zeros(len(first))
    for s in signals:
        total = total + s.samples
    label = "+".join(s.label for s in signals if s.label) or "mix"
    return Signal(total, first.sample_rate, label=label)


def soi_spectral_profile(spec: SoiSpec, freq_axis: np.ndarray) -> np.ndarray:
    """Expected spectral shape of the impulsive component.

    Lorentzian-like profile ``A^2 / (8*pi*(damping^2 + 4*pi^2*(f - fc)^2))``
    centered on the carrier.
    """
    f = np.asarray(freq_axis, dtype=np.float64)
    if f.size > 1 and np.any(np.diff(f) < 0):
        raise ValueError("freq_axis must be sorted ascending")
    return spec.amplitude**2 / (
        8.0 * np.pi * (spec.damping**2 + 4.0 * np.pi**2 * (f - spec.carrier_freq) ** 2)
    )


def soi_half_power_bandwidth(spec: SoiSpec) -> float:
    """Half-power bandwidth of the spectral profile used as a filter response.

    Width between the points where the squared profile drops to half its
    peak: ``damping * sqrt(sqrt(2) - 1) / pi``.
    """
    return spec.damping * math.sqrt(math.sqrt(2.0) - 1.0) / math.pi


def _format_float(x: float) -> str:
    return repr(float(x))


def save_signal(signal: Signal, path, fmt: str | None = None, encoding: str = "float32") -> None:
    """Write a signal as WAV (float32 or pcm16) or CSV.

    The CSV format is a ``sample_rate=<Hz>`` header line followed by one
    sample per line.  ``pcm16`` expects samples in [-1, 1] and quantizes.
    """
    path = str(path)
    fmt = fmt or ("csv" if path.endswith(".csv") else "wav")
    if fmt == "csv":
        lines = [f"sample_rate={_format_float(signal.sample_rate)}"]
        lines.extend(_format_float(v) for v in signal.samples)
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    elif fmt == "wav":
        rate = int(round(signal.sample_rate))
        if abs(rate - signal.sample_rate) > 1e-9:
            raise ValueError("WAV requires an integral sample rate")
        if encoding == "float32":
            wavfile.write(path, rate, signal.samples.astype(np.float32))
        elif encoding == "pcm16":
            if np.max(np.abs(signal.samples)) > 1.0:
                raise ValueError("pcm16 requires samples in [-1, 1]")
            quantized = np.clip(np.round(signal.samples * 32768.0), -32768, 32767)
            wavfile.write(path, rate, quantized.astype(np.int16))
        else:
            raise ValueError(f"unknown WAV encoding: {encoding}")
    else:
        raise ValueError(f"unknown format: {fmt}")


def load_signal(path, fmt: str | None = None) -> Signal:
    """Read a signal from WAV (PCM 16/32-bit or float) or CSV."""
    import os

    path = str(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    fmt = fmt or ("csv" if path.endswith(".csv") else "wav")
    label = os.path.splitext(os.path.basename(path))[0]
    if fmt == "csv":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("sample_rate="):
                raise ValueError("malformed CSV header: expected sample_rate=<Hz>")
            try:
                rate = float(header.split("=", 1)[1])
            except ValueError as exc:
                raise ValueError("malformed CSV header: bad sample rate") from exc
            body = [line.strip() for line in fh if line.strip()]
        if not body:
            raise ValueError("empty signal")
        samples = np.array([float(v) for v in body])
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")
        return Signal(samples, rate, label=label)
    if fmt == "wav":
        rate, data = wavfile.read(path)
        if data.ndim != 1:
            raise ValueError("multi-channel WAV is not supported")
        if data.size == 0:
            raise ValueError("empty signal")
        if data.dtype == np.int16:
            samples = data.astype(np.float64) / 32768.0
        elif data.dtype == np.int32:
            samples = data.astype(np.float64) / 2147483648.0
        elif data.dtype in (np.float32, np.float64):
            samples = data.astype(np.float64)
        else:
            raise ValueError(f"unsupported WAV sample format: {data.dtype}")
        return Signal(samples, float(rate), label=label)
    raise ValueError(f"unknown format: {fmt}")
