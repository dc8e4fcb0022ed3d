"""Frequency-band extraction from spectrograms via orthogonal non-negative
factorization, with impulsiveness and cyclicity scoring for local-damage
detection in rotating machinery."""

from .diagnostics import (
    DiagnosticReport,
    EnvelopeSpectrum,
    envelope_spectrum,
    envsi,
    kurtosis,
    select_best_filter,
    spectral_kurtosis,
    spectral_kurtosis_selector,
)
from .factorize import (
    FactorModel,
    NoAcceptedCandidateError,
    SsOnmfConfig,
    beta_schedule,
    nmf_mu,
    onmfs,
    orthogonality_defect,
    ss_onmf,
    truncated_svd,
    update_w,
    update_w_onmfs,
)
from .harness import (
    ExperimentConfig,
    McResult,
    derive_trial_seed,
    export_report,
    rank_sweep,
    run_trial,
)
from .signals import (
    NoiseSpec,
    Signal,
    SoiSpec,
    generate_noise,
    generate_soi,
    load_signal,
    mix,
    save_signal,
    soi_half_power_bandwidth,
    soi_spectral_profile,
)
from .tfr import BandFilter, Spectrogram, StftConfig, apply_band_filter, istft, stft

__version__ = "0.1.0"

__all__ = [
    "BandFilter",
    "DiagnosticReport",
    "EnvelopeSpectrum",
    "ExperimentConfig",
    "FactorModel",
    "McResult",
    "NoAcceptedCandidateError",
    "NoiseSpec",
    "Signal",
    "SoiSpec",
    "Spectrogram",
    "SsOnmfConfig",
    "StftConfig",
    "apply_band_filter",
    "beta_schedule",
    "derive_trial_seed",
    "envelope_spectrum",
    "envsi",
    "export_report",
    "generate_noise",
    "generate_soi",
    "istft",
    "kurtosis",
    "load_signal",
    "mix",
    "nmf_mu",
    "onmfs",
    "orthogonality_defect",
    "rank_sweep",
    "run_trial",
    "save_signal",
    "select_best_filter",
    "soi_half_power_bandwidth",
    "soi_spectral_profile",
    "spectral_kurtosis",
    "spectral_kurtosis_selector",
    "ss_onmf",
    "stft",
    "truncated_svd",
    "update_w",
    "update_w_onmfs",
]
