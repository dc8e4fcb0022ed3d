"""Named simulation scenarios.

``gauss_<sigma>`` presets mix the cyclic impulsive component (amplitude 3,
carrier 2.5 kHz, fault frequency 30 Hz) with white Gaussian noise of the
given standard deviation.  ``nongauss_<amp>_<sigma>`` presets add random
non-Gaussian bursts of the given maximum amplitude at a 6 kHz carrier.
"""

from __future__ import annotations

from .signals import (
    DEFAULT_DURATION,
    DEFAULT_IMPULSE_RATE,
    DEFAULT_SAMPLE_RATE,
    NoiseSpec,
    SoiSpec,
)

SOI_AMPLITUDE = 3.0
SOI_CARRIER_HZ = 2500.0
SOI_DAMPING = 1000.0
FAULT_FREQ_HZ = 30.0
IMPULSE_CARRIER_HZ = 6000.0

GAUSS_SIGMAS = (0.5, 1.7, 2.0)
NONGAUSS_AMPS = (5.0, 15.0)
NONGAUSS_SIGMAS = (0.5, 1.1, 2.0)


def _soi() -> SoiSpec:
    return SoiSpec(
        amplitude=SOI_AMPLITUDE,
        carrier_freq=SOI_CARRIER_HZ,
        damping=SOI_DAMPING,
        fault_freq=FAULT_FREQ_HZ,
        duration=DEFAULT_DURATION,
    )


def preset_names() -> list[str]:
    names = [f"gauss_{s:g}" for s in GAUSS_SIGMAS]
    names += [f"nongauss_{a:g}_{s:g}" for a in NONGAUSS_AMPS for s in NONGAUSS_SIGMAS]
    return names


def build_preset(name: str) -> dict:
    """Scenario pieces for a preset name.

    Returns a dict with ``scenario``, ``soi``, ``noise``, ``sample_rate``,
    ``fault_freq`` and the natural ``criterion`` for the scenario.
    """
    parts = name.split("_")
    try:
        if parts[0] == "gauss" and len(parts) == 2:
            sigma = float(parts[1])
            noise = NoiseSpec(gaussian_sigma=sigma)
            return {
                "scenario": "sim_gaussian",
                "soi": _soi(),
                "noise": noise,
                "sample_rate": DEFAULT_SAMPLE_RATE,
                "fault_freq": FAULT_FREQ_HZ,
                "criterion": "kurtosis",
            }
        if parts[0] == "nongauss" and len(parts) == 3:
            amp = float(parts[1])
            sigma = float(parts[2])
            noise = NoiseSpec(
                gaussian_sigma=sigma,
                impulse_max_amplitude=amp,
                impulse_carrier_freq=IMPULSE_CARRIER_HZ,
                impulse_rate=DEFAULT_IMPULSE_RATE,
            )
            return {
                "scenario": "sim_nongaussian",
                "soi": _soi(),
                "noise": noise,
                "sample_rate": DEFAULT_SAMPLE_RATE,
                "fault_freq": FAULT_FREQ_HZ,
                "criterion": "envsi",
            }
    except ValueError as exc:
        raise ValueError(f"unknown preset: {name}") from exc
    raise ValueError(f"unknown preset: {name}")
