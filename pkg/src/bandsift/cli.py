"""Command-line front end.

Three subcommands cover the full workflow:

* ``simulate`` -- write a scenario's component and mixture signals to disk;
* ``analyze``  -- one pipeline pass over a signal at a fixed rank and seed;
* ``sweep``    -- the Monte-Carlo rank sweep with CSV/JSON reports.

Configuration comes from a JSON document mirroring the experiment config
(see ``config_from_dict``), from a named preset, or from flags; flags win.
Figures are rendered next to the delimited output unless ``--no-figures``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import diagnostics, harness, plots, presets
from .factorize import save_factor_model
from .harness import ExperimentConfig, config_to_dict, derive_trial_seed, run_trial
from .signals import NoiseSpec, SoiSpec, generate_noise, generate_soi, mix, save_signal
from .tfr import StftConfig, apply_band_filter, save_spectrogram_csv, stft

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


_CONFIG_KEYS = {
    "scenario", "stft", "method", "rank_range", "trials", "criterion",
    "fault_freq", "base_seed", "sample_rate", "input_path", "ss_iters",
    "onmfs_iters", "nmf_iters", "min_bandwidth_factor", "beta_floor",
    "tsvd_rank", "harmonics", "tol_bins", "soi", "noise",
}
_STFT_KEYS = {"window_length", "overlap", "nfft", "window_kind"}
_SOI_KEYS = {"amplitude", "carrier_freq", "damping", "fault_freq", "duration", "phase"}
_NOISE_KEYS = {"gaussian_sigma", "impulse_max_amplitude", "impulse_carrier_freq",
               "impulse_rate", "machine_response", "seed"}


def _check_keys(doc: dict, allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an experiment config from a JSON document, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _check_keys(doc, _CONFIG_KEYS, "config")
    try:
        stft_doc = doc.get("stft") or {}
        _check_keys(stft_doc, _STFT_KEYS, "config.stft")
        stft_config = StftConfig(**stft_doc)
        soi = None
        if doc.get("soi") is not None:
            _check_keys(doc["soi"], _SOI_KEYS, "config.soi")
            soi = SoiSpec(**doc["soi"])
        noise = None
        if doc.get("noise") is not None:
            noise_doc = dict(doc["noise"])
            _check_keys(noise_doc, _NOISE_KEYS, "config.noise")
            if noise_doc.get("machine_response") is not None:
                noise_doc["machine_response"] = tuple(noise_doc["machine_response"])
            noise = NoiseSpec(**noise_doc)
        rank_range = doc.get("rank_range", [6, 15])
        return ExperimentConfig(
            scenario=doc["scenario"],
            stft=stft_config,
            method=doc.get("method", "ss_onmf"),
            rank_range=(int(rank_range[0]), int(rank_range[1])),
            trials=int(doc.get("trials", 25)),
            criterion=doc.get("criterion", "kurtosis"),
            fault_freq=float(doc["fault_freq"]),
            base_seed=int(doc.get("base_seed", 0)),
            soi=soi,
            noise=noise,
            sample_rate=float(doc.get("sample_rate", 25000.0)),
            input_path=doc.get("input_path"),
            ss_iters=int(doc.get("ss_iters", 60000)),
            onmfs_iters=int(doc.get("onmfs_iters", 200)),
            nmf_iters=int(doc.get("nmf_iters", 500)),
            min_bandwidth_factor=float(doc.get("min_bandwidth_factor", 0.01)),
            beta_floor=float(doc.get("beta_floor", 1e-3)),
            tsvd_rank=None if doc.get("tsvd_rank") is None else int(doc["tsvd_rank"]),
            harmonics=int(doc.get("harmonics", 10)),
            tol_bins=int(doc.get("tol_bins", 2)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _load_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _preset_doc(name: str) -> dict:
    try:
        scenario = presets.build_preset(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return {
        "scenario": scenario["scenario"],
        "soi": dataclasses.asdict(scenario["soi"]),
        "noise": dataclasses.asdict(scenario["noise"]),
        "sample_rate": scenario["sample_rate"],
        "fault_freq": scenario["fault_freq"],
        "criterion": scenario["criterion"],
        "stft": {},
    }


def _build_config(args, need_signal: bool = True) -> ExperimentConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        doc = _load_config_file(args.config)
    if getattr(args, "preset", None):
        preset_doc = _preset_doc(args.preset)
        preset_doc.update(doc)
        doc = preset_doc
    if getattr(args, "input", None):
        doc["scenario"] = "file"
        doc["input_path"] = args.input
    if getattr(args, "fault_freq", None) is not None:
        doc["fault_freq"] = args.fault_freq
    if not doc.get("scenario"):
        raise ConfigError("no scenario: pass --preset, --config, or --input")
    if doc["scenario"] == "file":
        if not doc.get("input_path"):
            raise ConfigError("file scenario requires input_path")
        if need_signal and not os.path.exists(doc["input_path"]):
            raise ConfigError(f"input signal not found: {doc['input_path']}")
        if "fault_freq" not in doc:
            raise ConfigError("file scenario requires fault_freq")

    if getattr(args, "method", None):
        doc["method"] = args.method
    if getattr(args, "criterion", None):
        doc["criterion"] = args.criterion
    if getattr(args, "seed", None) is not None:
        doc["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        doc["trials"] = args.trials
    if getattr(args, "ranks", None):
        try:
            lo, hi = args.ranks.split("..")
            doc["rank_range"] = [int(lo), int(hi)]
        except ValueError as exc:
            raise ConfigError("--ranks expects the form a..b") from exc
    if getattr(args, "rank", None) is not None:
        doc["rank_range"] = [args.rank, args.rank]
    if getattr(args, "iters", None) is not None:
        doc["ss_iters"] = args.iters
    return config_from_dict(doc)


def _write_manifest(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    config = _build_config(args, need_signal=False)
    if config.scenario == "file":
        raise ConfigError("simulate needs a simulated scenario, not a file input")
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    noise_seed = config.base_seed
    soi = generate_soi(config.soi, config.sample_rate)
    gaussian_spec = dataclasses.replace(config.noise, impulse_max_amplitude=0.0, seed=noise_seed)
    gaussian = generate_noise(gaussian_spec, config.soi.duration, config.sample_rate)
    impulsive_spec = dataclasses.replace(config.noise, gaussian_sigma=0.0, seed=noise_seed)
    impulsive = generate_noise(impulsive_spec, config.soi.duration, config.sample_rate)
    mixed = mix([soi, gaussian, impulsive])

    components = {"soi": soi, "gaussian": gaussian, "impulsive": impulsive, "mixed": mixed}
    for name, signal in components.items():
        save_signal(signal, os.path.join(out_dir, f"{name}.wav"))
    save_signal(mixed, os.path.join(out_dir, "mixed.csv"), fmt="csv")

    spec = stft(mixed, config.stft)
    save_spectrogram_csv(spec, os.path.join(out_dir, "spectrogram.csv"))
    if not args.no_figures:
        plots.save_signal_plot(mixed, os.path.join(out_dir, "mixed.png"), "mixed signal")
        plots.save_spectrogram_plot(spec, os.path.join(out_dir, "spectrogram.png"))

    _write_manifest(os.path.join(out_dir, "manifest.json"), {
        "command": "simulate",
        "config": config_to_dict(config),
        "noise_seed": noise_seed,
        "files": sorted(os.listdir(out_dir)),
    })
    print(f"wrote {len(components) + 2} signal/spectrogram files to {out_dir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _build_config(args)
    rank = config.rank_range[0]
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    trial_seed = derive_trial_seed(config.base_seed, rank, 0)
    report, model = run_trial(config, rank, trial_seed)

    noise_seed, _ = harness._trial_streams(trial_seed)
    signal = harness.build_trial_signal(config, noise_seed)
    filtered = apply_band_filter(signal, report.band_filter, config.stft)

    diagnostics.save_report_json(report, os.path.join(out_dir, "report.json"))
    diagnostics.save_filter_csv(report.band_filter, os.path.join(out_dir, "filter.csv"))
    diagnostics.save_envelope_csv(report.envelope, os.path.join(out_dir, "envelope.csv"))
    save_signal(filtered, os.path.join(out_dir, "filtered.wav"))
    if model is not None:
        save_factor_model(model, os.path.join(out_dir, "model"))
    if not args.no_figures:
        plots.save_filter_plot(report.band_filter, os.path.join(out_dir, "filter.png"),
                               f"selected filter ({config.method}, rank {rank})")
        plots.save_envelope_plot(report.envelope, config.fault_freq, config.harmonics,
                                 os.path.join(out_dir, "envelope.png"), "envelope spectrum")
        plots.save_signal_plot(filtered, os.path.join(out_dir, "filtered.png"), "filtered signal")

    _write_manifest(os.path.join(out_dir, "manifest.json"), {
        "command": "analyze",
        "config": config_to_dict(config),
        "rank": rank,
        "trial_seed": trial_seed,
        "kurtosis": report.kurtosis,
        "envsi": report.envsi,
        "selected_filter_index": report.selected_filter_index,
        "filter_energy_centroid_hz": report.band_filter.energy_centroid(),
        "files": sorted(os.listdir(out_dir)),
    })
    print(f"kurtosis={report.kurtosis:.3f} envsi={report.envsi:.3f} "
          f"centroid={report.band_filter.energy_centroid():.0f} Hz -> {out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _build_config(args)
    methods = [m.strip() for m in args.methods.split(",")] if args.methods else [config.method]
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    summaries = {}
    for method in methods:
        method_config = dataclasses.replace(config, method=method)
        result = harness.rank_sweep(method_config, jobs=args.jobs)
        method_dir = os.path.join(out_dir, method) if len(methods) > 1 else out_dir
        harness.export_report(result, method_dir)
        if not args.no_figures:
            plots.save_rank_boxplot(result, os.path.join(method_dir, "boxplot.png"),
                                    f"{method}: {result.criterion} per rank")
        summaries[method] = {
            "best_rank": result.best_rank,
            "per_rank_median": {str(s.rank): s.median for s in result.stats},
            "failures": sum(1 for r in result.records if r.status == "failed"),
        }
        print(f"{method}: best rank {result.best_rank}, "
              f"median {dict((s.rank, round(s.median, 3)) for s in result.stats)}")

    _write_manifest(os.path.join(out_dir, "manifest.json"), {
        "command": "sweep",
        "config": config_to_dict(config),
        "methods": summaries,
        "shared_seed_scheme": "numpy SeedSequence((base_seed, rank, trial))",
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandsift",
        description="Optimal frequency-band extraction from spectrograms and "
                    "impulsiveness/cyclicity scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_signal=True):
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--preset", help="named scenario, e.g. gauss_0.5 or nongauss_15_2.0 "
                                        f"(available: {', '.join(presets.preset_names())})")
        p.add_argument("--seed", type=int, help="base seed for all randomness")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        if with_signal:
            p.add_argument("--input", help="WAV or CSV signal file (file scenario)")
            p.add_argument("--fault-freq", type=float, dest="fault_freq",
                           help="fault repetition frequency in Hz")
            p.add_argument("--method", choices=harness.METHODS, help="band selector")
            p.add_argument("--criterion", choices=harness.CRITERIA, help="score to maximize")
            p.add_argument("--iters", type=int, help="stochastic solver iterations")

    p_sim = sub.add_parser("simulate", help="generate a scenario's signals")
    common(p_sim, with_signal=False)
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="single pipeline pass at one rank")
    common(p_an)
    p_an.add_argument("--rank", type=int, default=10, help="factorization rank")
    p_an.set_defaults(func=cmd_analyze)

    p_sw = sub.add_parser("sweep", help="Monte-Carlo rank sweep")
    common(p_sw)
    p_sw.add_argument("--rank", type=int, help="single rank (overrides --ranks)")
    p_sw.add_argument("--ranks", help="inclusive rank range a..b (default 6..15)")
    p_sw.add_argument("--trials", type=int, help="Monte-Carlo trials per rank")
    p_sw.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sw.add_argument("--methods", help="comma-separated methods sharing seeds")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
