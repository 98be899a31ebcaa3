"""Command-line harness: simulate, recover, sweep-snr, sweep-snapshots.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .arrays import gen_scene, simulate
from .harness import (
    SNAPSHOT_SWEEP_COLUMNS,
    SNR_SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    run_trial,
    sweep_snapshots,
    sweep_snr,
)
from .recovery import recover_from_measurements
from .serialize import (
    load_json,
    measurement_set_from_dict,
    measurement_set_to_dict,
    save_json,
    scene_to_dict,
    write_csv,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftdoa",
        description="Joint array self-calibration and sparse DoA estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "generate a synthetic scene and measurement set"),
        ("recover", "run the recovery pipeline on a measurement file"),
        ("sweep-snr", "Monte Carlo RMSE versus SNR"),
        ("sweep-snapshots", "Monte Carlo RMSE and timing versus snapshot count"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--threads", type=int, default=None, help="trial worker count")
        p.add_argument("--no-reduce", action="store_true",
                       help="disable the SVD snapshot reduction")
        p.add_argument("--group-mode", choices=["grid", "row", "l1"], default=None,
                       help="solver group structure (l1 = elementwise)")
        if name == "recover":
            p.add_argument("--data", default=None,
                           help="measurement JSON (defaults to simulating from config)")
        if name == "simulate":
            p.add_argument("--noiseless", action="store_true",
                           help="force noise_sigma = 0")
    return parser


def _load_config(args) -> ExperimentConfig:
    data = load_json(args.config)
    exp = ExperimentConfig.from_dict(data)
    if args.seed is not None:
        exp.base_seed = args.seed
    if args.threads is not None:
        exp.threads = args.threads
    if args.no_reduce:
        exp.reduce = False
    if args.group_mode is not None:
        exp.group_mode = "elementwise" if args.group_mode == "l1" else args.group_mode
    return exp


def _cmd_simulate(exp: ExperimentConfig, out: Path, noiseless: bool) -> int:
    cfg = exp.array_config()
    sigma = 0.0 if noiseless else exp.noise_sigma
    scene_seed, noise_seed = np.random.SeedSequence(exp.base_seed).generate_state(2)
    scene = gen_scene(cfg, exp.doas_deg, exp.num_snapshots, exp.snr_db,
                      h_spec=exp.resolve_h_spec(), seed=int(scene_seed),
                      noise_sigma=sigma)
    ms = simulate(cfg, scene, int(noise_seed))
    save_json(out / "scene.json", scene_to_dict(scene))
    save_json(out / "measurements.json", measurement_set_to_dict(ms))
    print(f"wrote {out / 'scene.json'} and {out / 'measurements.json'}")
    return 0


def _cmd_recover(exp: ExperimentConfig, out: Path, data_path) -> int:
    cfg = exp.array_config()
    if data_path is not None:
        ms = measurement_set_from_dict(load_json(data_path))
        if ms.num_sensors != cfg.num_sensors:
            raise ConfigError(
                f"dataset has {ms.num_sensors} sensors, config expects {cfg.num_sensors}"
            )
        y = ms.Y
    else:
        scene_seed, noise_seed = np.random.SeedSequence(exp.base_seed).generate_state(2)
        scene = gen_scene(cfg, exp.doas_deg, exp.num_snapshots, exp.snr_db,
                          h_spec=exp.resolve_h_spec(), seed=int(scene_seed),
                          noise_sigma=exp.noise_sigma)
        y = simulate(cfg, scene, int(noise_seed)).Y

    result = recover_from_measurements(
        y, cfg,
        n_sources=exp.num_sources,
        opts=exp.solver_options(),
        reduce_snapshots=exp.reduce,
        k_reduce=exp.k_reduce,
        group_mode=exp.group_mode,
        eta=exp.eta,
        noise_sigma=exp.noise_sigma,
        eta_slack=exp.eta_slack,
    )
    save_json(out / "recovery.json", result.to_json_dict())
    write_csv(out / "spectrum.csv", ["angle_deg", "amplitude"],
              zip(cfg.grid_angles, result.spectrum))
    print(f"estimated DoAs (deg): {[float(x) for x in result.doas_deg]}")
    if not result.report.converged:
        print("solver did not converge; see recovery.json", file=sys.stderr)
        return 3
    return 0


def _cmd_sweep_snr(exp: ExperimentConfig, out: Path) -> int:
    sweep = sweep_snr(exp, method="mmv")
    write_csv(out / "snr_sweep.csv", SNR_SWEEP_COLUMNS, sweep.to_rows(SNR_SWEEP_COLUMNS))
    if exp.baseline:
        base = sweep_snr(exp, method="smv-l1")
        write_csv(out / "snr_sweep_smv-l1.csv", SNR_SWEEP_COLUMNS,
                  base.to_rows(SNR_SWEEP_COLUMNS))
    print(f"wrote {out / 'snr_sweep.csv'}")
    return 0


def _cmd_sweep_snapshots(exp: ExperimentConfig, out: Path) -> int:
    sweep = sweep_snapshots(exp, method="mmv")
    write_csv(out / "snapshot_sweep.csv", SNAPSHOT_SWEEP_COLUMNS,
              sweep.to_rows(SNAPSHOT_SWEEP_COLUMNS))
    print(f"wrote {out / 'snapshot_sweep.csv'}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        exp = _load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return _cmd_simulate(exp, out, args.noiseless)
        if args.command == "recover":
            return _cmd_recover(exp, out, args.data)
        if args.command == "sweep-snr":
            return _cmd_sweep_snr(exp, out)
        if args.command == "sweep-snapshots":
            return _cmd_sweep_snapshots(exp, out)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
