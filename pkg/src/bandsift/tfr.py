"""Short-time Fourier analysis, synthesis, and frequency-band filtering.

The analysis produces the non-negative power matrix consumed by the
factorization stage; the synthesis applies a magnitude response per frame
and reconstructs with weighted overlap-add (synthesis window equal to the
analysis window, normalized by the summed squared window), which inverts
the analysis exactly when the response is all-ones.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .signals import Signal, _format_float


@dataclass(frozen=True)
class StftConfig:
    window_length: int = 128
    overlap: int = 100
    nfft: int = 512
    window_kind: str = "hamming"

    def __post_init__(self):
        if not (0 <= self.overlap < self.window_length <= self.nfft):
            raise ValueError("need 0 <= overlap < window_length <= nfft")
        if self.window_kind != "hamming":
            raise ValueError(f"unsupported window: {self.window_kind}")

    @property
    def hop(self) -> int:
        return self.window_length - self.overlap

    @property
    def n_bins(self) -> int:
        return self.nfft // 2 + 1

    def window(self) -> np.ndarray:
        return np.hamming(self.window_length)

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.window_length:
            raise ValueError("signal shorter than one analysis window")
        return (n_samples - self.window_length) // self.hop + 1


@dataclass(frozen=True)
class Spectrogram:
    """One-sided STFT frames and their squared magnitudes."""

    frames: np.ndarray        # complex, n_bins x n_frames
    power: np.ndarray         # float, n_bins x n_frames
    freq_axis: np.ndarray     # Hz, n_bins
    time_axis: np.ndarray     # s, window centers
    config: StftConfig
    sample_rate: float

    @property
    def n_bins(self) -> int:
        return self.frames.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class BandFilter:
    """Magnitude frequency response over the STFT bins."""

    response: np.ndarray
    freq_axis: np.ndarray
    normalization: str = "unit_max"   # "unit_max" or "unit_l2"

    def __post_init__(self):
        response = np.asarray(self.response, dtype=np.float64)
        if response.ndim != 1:
            raise ValueError("response must be 1-D")
        if np.any(response < 0) or not np.all(np.isfinite(response)):
            raise ValueError("response must be finite and non-negative")
        if response.max() <= 0:
            raise ValueError("response must have a positive maximum")
        if self.normalization not in ("unit_max", "unit_l2"):
            raise ValueError(f"unknown normalization: {self.normalization}")
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "freq_axis", np.asarray(self.freq_axis, dtype=np.float64))

    def as_unit_max(self) -> "BandFilter":
        if self.normalization == "unit_max":
            return self
        return BandFilter(self.response / self.response.max(), self.freq_axis, "unit_max")

    def energy_centroid(self) -> float:
        energy = self.response**2
        return float(np.sum(self.freq_axis * energy) / np.sum(energy))


def stft(signal: Signal, config: StftConfig) -> Spectrogram:
    """One-sided STFT with hop = window_length - overlap.

    Trailing samples that do not fill a final window are dropped.
    """
    x = signal.samples
    n_frames = config.frame_count(x.size)
    window = config.window()
    segments = sliding_window_view(x, config.window_length)[:: config.hop][:n_frames]
    frames = np.fft.rfft(segments * window, n=config.nfft, axis=1).T
    power = np.abs(frames) ** 2
    freq_axis = np.fft.rfftfreq(config.nfft, 1.0 / signal.sample_rate)
    starts = np.arange(n_frames) * config.hop
    time_axis = (starts + config.window_length / 2.0) / signal.sample_rate
    return Spectrogram(frames, power, freq_axis, time_axis, config, signal.sample_rate)


# Samples whose accumulated synthesis weight falls below this fraction of
# the peak weight are zeroed: at the signal edges the window tails carry
# almost no weight, and dividing modified frames there amplifies content by
# up to 1/w(0)^2.
EDGE_WEIGHT_TOL = 0.01


def istft(frames: np.ndarray, config: StftConfig, sample_rate: float,
          length: int | None = None) -> Signal:
    """Weighted overlap-add synthesis of one-sided STFT frames.

    The natural output length is ``(n_frames - 1) * hop + window_length``;
    ``length`` zero-pads or truncates to a requested size.  Inverts ``stft``
    exactly for unmodified frames away from the edges; the few leading and
    trailing samples with negligible window weight are zeroed.
    """
    frames = np.asarray(frames)
    if frames.ndim != 2 or frames.shape[0] != config.n_bins:
        raise ValueError("frames must be a (nfft//2 + 1) x n_frames matrix")
    n_frames = frames.shape[1]
    if n_frames < 1:
        raise ValueError("need at least one frame")
    window = config.window()
    wl, hop = config.window_length, config.hop
    natural = (n_frames - 1) * hop + wl

    segments = np.fft.irfft(frames.T, n=config.nfft, axis=1)[:, :wl]
    numerator = np.zeros(natural)
    weight = np.zeros(natural)
    wsq = window * window
    for t in range(n_frames):
        sl = slice(t * hop, t * hop + wl)
        numerator[sl] += window * segments[t]
        weight[sl] += wsq
    out = np.zeros(natural)
    solid = weight >= EDGE_WEIGHT_TOL * weight.max()
    out[solid] = numerator[solid] / weight[solid]
    if length is not None:
        padded = np.zeros(length)
        m = min(natural, length)
        padded[:m] = out[:m]
        out = padded
    return Signal(out, sample_rate, label="istft")


def apply_band_filter(signal: Signal, band_filter: BandFilter, config: StftConfig) -> Signal:
    """Filter a signal by scaling each STFT frame with a magnitude response.

    The response is normalized to unit maximum before application, so the
    pass band has unit gain.  Output length equals input length; trailing
    samples not covered by a full analysis window are zero.
    """
    if band_filter.response.size != config.n_bins:
        raise ValueError("filter bin count does not match the STFT configuration")
    spec = stft(signal, config)
    return _filter_frames(spec.frames, band_filter, config, signal.sample_rate, len(signal))


def _filter_frames(frames: np.ndarray, band_filter: BandFilter, config: StftConfig,
                   sample_rate: float, length: int) -> Signal:
    response = band_filter.as_unit_max().response
    filtered = frames * response[:, None]
    out = istft(filtered, config, sample_rate, length=length)
    return Signal(out.samples, sample_rate, label="filtered")


def save_spectrogram_csv(spec: Spectrogram, path) -> None:
    """Power matrix as CSV: header row carries the time axis, first column
    the frequency axis."""
    with open(str(path), "w") as fh:
        fh.write("freq_hz," + ",".join(_format_float(t) for t in spec.time_axis) + "\n")
        for i in range(spec.n_bins):
            row = ",".join(_format_float(v) for v in spec.power[i])
            fh.write(_format_float(spec.freq_axis[i]) + "," + row + "\n")


_MAGIC = b"BSSG"


def save_spectrogram_binary(spec: Spectrogram, path) -> None:
    """Compact little-endian dump.

    Layout: magic ``BSSG``; uint32 n_bins ``I``; uint32 n_frames ``T``;
    float64 sample rate; float64 freq_axis[I]; float64 time_axis[T];
    float64 power[I*T] in row-major order.
    """
    with open(str(path), "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", spec.n_bins, spec.n_frames))
        fh.write(struct.pack("<d", spec.sample_rate))
        fh.write(spec.freq_axis.astype("<f8").tobytes())
        fh.write(spec.time_axis.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(spec.power, dtype="<f8").tobytes())


def load_spectrogram_binary(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Read the binary dump; returns (power, freq_axis, time_axis, sample_rate)."""
    with open(str(path), "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a spectrogram dump")
        n_bins, n_frames = struct.unpack("<II", fh.read(8))
        (sample_rate,) = struct.unpack("<d", fh.read(8))
        freq_axis = np.frombuffer(fh.read(8 * n_bins), dtype="<f8")
        time_axis = np.frombuffer(fh.read(8 * n_frames), dtype="<f8")
        power = np.frombuffer(fh.read(8 * n_bins * n_frames), dtype="<f8")
    return power.reshape(n_bins, n_frames).copy(), freq_axis.copy(), time_axis.copy(), sample_rate
