"""Matplotlib figure rendering for the CLI report paths.

Kept out of the analysis modules so the pipeline itself stays free of
plotting concerns; the CLI calls these to drop PNGs next to the CSV output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import EnvelopeSpectrum
from .harness import McResult
from .signals import Signal
from .tfr import BandFilter, Spectrogram


def save_signal_plot(signal: Signal, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(signal.times, signal.samples, lw=0.4)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("amplitude")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_spectrogram_plot(spec: Spectrogram, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    db = 10.0 * np.log10(spec.power + 1e-12)
    mesh = ax.pcolormesh(spec.time_axis, spec.freq_axis / 1000.0, db, shading="auto")
    fig.colorbar(mesh, ax=ax, label="power [dB]")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frequency [kHz]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_filter_plot(band: BandFilter, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(band.freq_axis / 1000.0, band.response, lw=1.0)
    ax.set_xlabel("frequency [kHz]")
    ax.set_ylabel("response")
    ax.set_ylim(bottom=0)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_envelope_plot(env: EnvelopeSpectrum, fault_freq: float, harmonics: int,
                       path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(env.freq_axis, env.amplitudes, lw=0.8)
    top = float(env.amplitudes.max()) if env.amplitudes.size else 1.0
    for k in range(1, harmonics + 1):
        f = k * fault_freq
        if f <= env.freq_axis[-1]:
            ax.axvline(f, color="tab:red", alpha=0.25, lw=0.8)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("amplitude")
    ax.set_ylim(0, top * 1.1 if top > 0 else 1.0)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_rank_boxplot(result: McResult, path, title: str = "") -> None:
    """Box-and-whisker chart of criterion values per rank, drawn from the
    precomputed sweep statistics."""
    boxes = []
    for s in result.stats:
        boxes.append({
            "label": str(s.rank),
            "med": s.median,
            "q1": s.q1,
            "q3": s.q3,
            "whislo": s.whisker_low,
            "whishi": s.whisker_high,
            "fliers": list(s.outliers),
        })
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bxp(boxes, showfliers=True)
    ax.set_xlabel("rank")
    ax.set_ylabel(result.criterion)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
