"""Monte-Carlo experiment protocol: rank sweep, trial seeding, reporting.

A sweep runs ``trials`` independent trials for every rank in a range.  Each
trial regenerates the scenario signal (for simulated scenarios), factorizes
its spectrogram, picks the best band filter by the configured criterion,
and records the criterion value.  Per-rank medians select the best rank;
failed trials are excluded from the statistics but counted.

Trial seeds are derived with ``numpy.random.SeedSequence((base_seed, rank,
trial))``, so every (rank, trial) cell is reproducible in isolation and
adding ranks or trials never reshuffles existing cells.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import diagnostics
from .diagnostics import DiagnosticReport, select_best_filter
from .factorize import FactorModel, NoAcceptedCandidateError, SsOnmfConfig, nmf_mu, onmfs, ss_onmf
from .signals import NoiseSpec, Signal, SoiSpec, _format_float, generate_noise, generate_soi, load_signal, mix
from .tfr import StftConfig, _filter_frames, stft

SCENARIOS = ("sim_gaussian", "sim_nongaussian", "file")
METHODS = ("ss_onmf", "onmfs", "nmf_mu", "sk")
CRITERIA = ("kurtosis", "envsi")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    stft: StftConfig
    method: str
    rank_range: tuple[int, int]
    trials: int
    criterion: str
    fault_freq: float
    base_seed: int = 0
    soi: SoiSpec | None = None
    noise: NoiseSpec | None = None
    sample_rate: float = 25000.0
    input_path: str | None = None
    ss_iters: int = 60000
    onmfs_iters: int = 200
    nmf_iters: int = 500
    min_bandwidth_factor: float = 0.01
    beta_floor: float = 1e-3
    tsvd_rank: int | None = None
    harmonics: int = 10
    tol_bins: int = 2

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario: {self.scenario}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method: {self.method}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion: {self.criterion}")
        lo, hi = self.rank_range
        if not (2 <= lo <= hi <= 64):
            raise ValueError("rank_range must satisfy 2 <= lo <= hi <= 64")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fault_freq <= 0:
            raise ValueError("fault_freq must be positive")
        if self.scenario == "file":
            if not self.input_path:
                raise ValueError("file scenario requires input_path")
        else:
            if self.soi is None or self.noise is None:
                raise ValueError("simulated scenarios require soi and noise specs")
            if self.scenario == "sim_gaussian" and self.noise.impulse_max_amplitude > 0:
                raise ValueError("sim_gaussian must not include impulsive noise")
            if self.scenario == "sim_nongaussian" and self.noise.impulse_max_amplitude <= 0:
                raise ValueError("sim_nongaussian requires impulsive noise")

    def ranks(self) -> range:
        return range(self.rank_range[0], self.rank_range[1] + 1)


@dataclass(frozen=True)
class TrialRecord:
    rank: int
    trial: int
    seed: int
    status: str                       # "ok" or "failed"
    criterion_value: float | None = None
    selected_filter_index: int | None = None
    kurtosis: float | None = None
    envsi: float | None = None
    error: str = ""
    report: DiagnosticReport | None = None


@dataclass(frozen=True)
class RankStats:
    rank: int
    successes: int
    failures: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    minimum: float
    maximum: float
    outliers: tuple


@dataclass(frozen=True)
class McResult:
    criterion: str
    records: tuple
    stats: tuple
    best_rank: int
    config: ExperimentConfig


def derive_trial_seed(base_seed: int, rank: int, trial: int) -> int:
    """Stable per-cell seed: SeedSequence over (base_seed, rank, trial)."""
    seq = np.random.SeedSequence((base_seed, rank, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def _trial_streams(trial_seed: int) -> tuple[int, int]:
    """Split a trial seed into independent signal and solver seeds."""
    state = np.random.SeedSequence(trial_seed).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def build_trial_signal(config: ExperimentConfig, noise_seed: int) -> Signal:
    """Scenario signal for one trial (fresh noise realization when simulated)."""
    if config.scenario == "file":
        return load_signal(config.input_path)
    soi = generate_soi(config.soi, config.sample_rate)
    noise_spec = dataclasses.replace(config.noise, seed=noise_seed)
    noise = generate_noise(noise_spec, config.soi.duration, config.sample_rate)
    return mix([soi, noise])


def default_tsvd_rank(rank: int) -> int:
    """Subspace depth used when none is configured.

    Twice the factor rank: deep enough that heavy-tailed candidate mixing
    produces bandwidth-diverse supports on noise-dominated spectrograms,
    but still a small fraction of the bin count.
    """
    return 2 * rank


def run_trial(config: ExperimentConfig, rank: int, trial_seed: int
              ) -> tuple[DiagnosticReport, FactorModel | None]:
    """One pass of the five-step pipeline at a fixed rank and seed."""
    noise_seed, solver_seed = _trial_streams(trial_seed)
    signal = build_trial_signal(config, noise_seed)
    spec = stft(signal, config.stft)

    if config.method == "sk":
        band = diagnostics.spectral_kurtosis_selector(spec)
        filtered = _filter_frames(spec.frames, band, config.stft,
                                  signal.sample_rate, len(signal))
        f_max = min((config.harmonics + 2.0) * config.fault_freq, signal.sample_rate / 2.0)
        env = diagnostics.envelope_spectrum(filtered, f_max)
        report = DiagnosticReport(
            kurtosis=diagnostics.kurtosis(filtered),
            envsi=diagnostics.envsi(env, config.fault_freq, config.harmonics, config.tol_bins),
            envelope=env,
            selected_filter_index=0,
            criterion=config.criterion,
            band_filter=band,
        )
        return report, None

    y = spec.power
    max_rank = min(y.shape)
    if config.method == "ss_onmf":
        tsvd_rank = config.tsvd_rank or min(default_tsvd_rank(rank), max_rank)
        model = ss_onmf(y, SsOnmfConfig(
            rank=rank,
            tsvd_rank=tsvd_rank,
            max_iters=config.ss_iters,
            min_bandwidth_factor=config.min_bandwidth_factor,
            beta_floor=config.beta_floor,
            seed=solver_seed,
        ))
    elif config.method == "onmfs":
        tsvd_rank = config.tsvd_rank or min(default_tsvd_rank(rank), max_rank)
        model = onmfs(y, tsvd_rank, rank, config.onmfs_iters, seed=solver_seed)
    elif config.method == "nmf_mu":
        model = nmf_mu(y, rank, config.nmf_iters, seed=solver_seed)
    else:  # pragma: no cover - guarded by config validation
        raise ValueError(config.method)

    report = select_best_filter(signal, model, config.criterion, config.fault_freq,
                                config.stft, config.harmonics, config.tol_bins)
    return report, model


def _run_trial_record(config: ExperimentConfig, rank: int, trial: int) -> TrialRecord:
    seed = derive_trial_seed(config.base_seed, rank, trial)
    try:
        report, _ = run_trial(config, rank, seed)
    except (NoAcceptedCandidateError, ValueError) as exc:
        return TrialRecord(rank, trial, seed, "failed", error=str(exc))
    value = report.kurtosis if config.criterion == "kurtosis" else report.envsi
    return TrialRecord(rank, trial, seed, "ok",
                       criterion_value=value,
                       selected_filter_index=report.selected_filter_index,
                       kurtosis=report.kurtosis,
                       envsi=report.envsi,
                       report=report)


def _run_trial_record_star(args) -> TrialRecord:
    return _run_trial_record(*args)


def boxplot_stats(values: np.ndarray) -> dict:
    """Median, quartiles, Tukey whiskers (1.5 IQR) and outliers."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = values[(values < lo_fence) | (values > hi_fence)]
    return {
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "minimum": float(values[0]),
        "maximum": float(values[-1]),
        "outliers": tuple(float(v) for v in outliers),
    }


def rank_sweep(config: ExperimentConfig, jobs: int = 1) -> McResult:
    """Run trials x ranks cells and aggregate per-rank statistics.

    Output is invariant to ``jobs``: every cell's seed is fixed up front and
    results are merged by (rank, trial) key.
    """
    tasks = [(config, rank, trial) for rank in config.ranks() for trial in range(config.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_trial_record_star, tasks, chunksize=1))
    else:
        records = [_run_trial_record(*task) for task in tasks]
    records.sort(key=lambda r: (r.rank, r.trial))

    stats = []
    for rank in config.ranks():
        values = [r.criterion_value for r in records if r.rank == rank and r.status == "ok"]
        failures = sum(1 for r in records if r.rank == rank and r.status == "failed")
        if not values:
            continue
        box = boxplot_stats(np.array(values))
        stats.append(RankStats(rank, len(values), failures, box["median"], box["q1"],
                               box["q3"], box["whisker_low"], box["whisker_high"],
                               box["minimum"], box["maximum"], box["outliers"]))
    if not stats:
        raise RuntimeError("all trials failed at every rank")
    best = max(stats, key=lambda s: (s.median, -s.rank))
    return McResult(config.criterion, tuple(records), tuple(stats), best.rank, config)


def median_trial_record(result: McResult, rank: int) -> TrialRecord:
    """The successful trial whose criterion value is closest to the rank
    median (lowest trial index on ties)."""
    stats = {s.rank: s for s in result.stats}
    if rank not in stats:
        raise ValueError(f"no successful trials at rank {rank}")
    median = stats[rank].median
    candidates = [r for r in result.records if r.rank == rank and r.status == "ok"]
    return min(candidates, key=lambda r: (abs(r.criterion_value - median), r.trial))


def config_to_dict(config: ExperimentConfig) -> dict:
    out = {
        "scenario": config.scenario,
        "stft": dataclasses.asdict(config.stft),
        "method": config.method,
        "rank_range": list(config.rank_range),
        "trials": config.trials,
        "criterion": config.criterion,
        "fault_freq": config.fault_freq,
        "base_seed": config.base_seed,
        "sample_rate": config.sample_rate,
        "input_path": config.input_path,
        "ss_iters": config.ss_iters,
        "onmfs_iters": config.onmfs_iters,
        "nmf_iters": config.nmf_iters,
        "min_bandwidth_factor": config.min_bandwidth_factor,
        "beta_floor": config.beta_floor,
        "tsvd_rank": config.tsvd_rank,
        "harmonics": config.harmonics,
        "tol_bins": config.tol_bins,
        "soi": dataclasses.asdict(config.soi) if config.soi else None,
        "noise": None,
    }
    if config.noise:
        noise = dataclasses.asdict(config.noise)
        if noise["machine_response"] is not None:
            noise["machine_response"] = list(noise["machine_response"])
        out["noise"] = noise
    return out


def export_report(result: McResult, out_dir) -> list[str]:
    """Write the sweep outputs: per-trial and per-rank CSV, the median
    trial's filter and envelope per rank, and a JSON manifest."""
    if not result.records:
        raise ValueError("nothing to export")
    out_dir = str(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _opt(v):
        return "" if v is None else _format_float(v)

    path = os.path.join(out_dir, "trials.csv")
    with open(path, "w") as fh:
        fh.write("rank,trial,seed,status,criterion_value,selected_filter_index,kurtosis,envsi,error\n")
        for r in result.records:
            index = "" if r.selected_filter_index is None else str(r.selected_filter_index)
            fh.write(f"{r.rank},{r.trial},{r.seed},{r.status},{_opt(r.criterion_value)},"
                     f"{index},{_opt(r.kurtosis)},{_opt(r.envsi)},{r.error}\n")
    written.append(path)

    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w") as fh:
        fh.write("rank,successes,failures,median,q1,q3,whisker_low,whisker_high,min,max,n_outliers\n")
        for s in result.stats:
            fh.write(f"{s.rank},{s.successes},{s.failures},{_format_float(s.median)},"
                     f"{_format_float(s.q1)},{_format_float(s.q3)},{_format_float(s.whisker_low)},"
                     f"{_format_float(s.whisker_high)},{_format_float(s.minimum)},"
                     f"{_format_float(s.maximum)},{len(s.outliers)}\n")
    written.append(path)

    path = os.path.join(out_dir, "outliers.csv")
    with open(path, "w") as fh:
        fh.write("rank,value\n")
        for s in result.stats:
            for v in s.outliers:
                fh.write(f"{s.rank},{_format_float(v)}\n")
    written.append(path)

    for s in result.stats:
        record = median_trial_record(result, s.rank)
        if record.report is None:
            continue
        fpath = os.path.join(out_dir, f"filter_rank{s.rank:02d}.csv")
        diagnostics.save_filter_csv(record.report.band_filter, fpath)
        written.append(fpath)
        epath = os.path.join(out_dir, f"envelope_rank{s.rank:02d}.csv")
        diagnostics.save_envelope_csv(record.report.envelope, epath)
        written.append(epath)

    manifest = {
        "config": config_to_dict(result.config),
        "criterion": result.criterion,
        "best_rank": result.best_rank,
        "seed_scheme": "numpy SeedSequence((base_seed, rank, trial))",
        "per_rank": [dataclasses.asdict(s) for s in result.stats],
        "trials": [
            {"rank": r.rank, "trial": r.trial, "seed": r.seed, "status": r.status,
             "criterion_value": r.criterion_value, "error": r.error}
            for r in result.records
        ],
        "failure_count": sum(1 for r in result.records if r.status == "failed"),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written
