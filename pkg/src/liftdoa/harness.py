"""Monte Carlo harness behind the CLI: trials, sweeps, aggregation.

Trials are independent; trial i derives its random streams from
``base_seed + i`` (separate child seeds for the scene and the noise), so
results do not depend on worker count or scheduling. Aggregation is
ordered by trial index.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .arrays import ArrayConfig, gen_scene, simulate
from .lifting import DEFAULT_DENSE_BUDGET
from .recovery import recover_from_measurements
from .solver import SolverOptions

__all__ = ["ConfigError", "ExperimentConfig", "SweepResult", "run_trial",
           "sweep_snr", "sweep_snapshots",
           "SNR_SWEEP_COLUMNS", "SNAPSHOT_SWEEP_COLUMNS"]

SNR_SWEEP_COLUMNS = ("snr_db", "rmse_deg", "mean_time_s", "success_rate")
SNAPSHOT_SWEEP_COLUMNS = ("snapshots", "rmse_deg", "mean_time_s",
                          "mean_svd_time_s", "mean_solve_time_s", "success_rate")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    """Array, scene, solver, and sweep settings for one experiment."""

    num_sensors: int = 8
    spacing_ratio: float = 0.5
    grid_start_deg: float = -90.0
    grid_step_deg: float = 1.0
    num_grid: int = 180
    grid_angles_deg: Optional[List[float]] = None
    calib_dim: int = 4

    num_sources: int = 2
    doas_deg: List[float] = field(default_factory=lambda: [-13.0, 28.0])
    num_snapshots: int = 100
    snr_db: float = 25.0
    noise_sigma: float = 1.0
    h_spec: object = "random"

    eta: Optional[float] = None
    eta_slack: float = 0.1
    rho: float = 1.0
    max_iters: int = 20000
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    group_mode: str = "grid"
    backend: str = "auto"
    dense_budget: int = DEFAULT_DENSE_BUDGET

    trials: int = 100
    base_seed: int = 0
    snr_grid_db: List[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    snapshot_grid: List[int] = field(default_factory=lambda: [1, 10, 50, 100, 300, 600, 1000])
    reduce: bool = True
    k_reduce: Optional[int] = None
    threads: int = 1
    baseline: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.num_sources < 1:
            raise ConfigError("num_sources must be positive")
        if len(self.doas_deg) != self.num_sources:
            raise ConfigError("doas_deg length must equal num_sources")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must be non-empty")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.group_mode not in ("grid", "row", "elementwise"):
            raise ConfigError(f"unknown group_mode {self.group_mode!r}")
        try:
            self.array_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build from the nested JSON layout (array/scene/solver/experiment)."""
        flat = {}
        for section in ("array", "scene", "solver", "experiment"):
            sub = data.get(section, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            flat.update(sub)
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(flat) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**flat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def array_config(self) -> ArrayConfig:
        if self.grid_angles_deg is not None:
            grid = np.asarray(self.grid_angles_deg, dtype=float)
        else:
            grid = self.grid_start_deg + self.grid_step_deg * np.arange(self.num_grid)
        return ArrayConfig(
            num_sensors=self.num_sensors,
            spacing_ratio=self.spacing_ratio,
            grid_angles=grid,
            calib_dim=self.calib_dim,
        )

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            eta=None,
            rho=self.rho,
            max_iters=self.max_iters,
            tol_primal=self.tol_primal,
            tol_dual=self.tol_dual,
            backend=self.backend,
            dense_budget=self.dense_budget,
        )

    def resolve_h_spec(self):
        if isinstance(self.h_spec, str):
            return self.h_spec
        from .serialize import pairs_to_complex

        return pairs_to_complex(self.h_spec)


@dataclass
class SweepResult:
    """One row of aggregate metrics per axis value."""

    axis_name: str
    rows: List[dict]

    def to_rows(self, columns: Sequence[str]) -> List[list]:
        return [[row[c] for c in columns] for row in self.rows]


def _trial_seeds(base_seed: int, trial: int) -> tuple[int, int]:
    state = np.random.SeedSequence(base_seed + trial).generate_state(2)
    return int(state[0]), int(state[1])


def run_trial(exp: ExperimentConfig, snr_db: float, num_snapshots: int,
              trial: int, method: str = "mmv") -> dict:
    """One Monte Carlo realization; returns per-trial metrics.

    ``method`` is "mmv" (the full pipeline) or "smv-l1" (single-snapshot
    elementwise-l1 baseline run on the first snapshot of the same scene).
    """
    cfg = exp.array_config()
    scene_seed, noise_seed = _trial_seeds(exp.base_seed, trial)
    scene = gen_scene(cfg, exp.doas_deg, num_snapshots, snr_db,
                      h_spec=exp.resolve_h_spec(), seed=scene_seed,
                      noise_sigma=exp.noise_sigma)
    y = simulate(cfg, scene, noise_seed).Y
    if method == "smv-l1":
        y = y[:, :1]
        group_mode = "elementwise"
    elif method == "mmv":
        group_mode = exp.group_mode
    else:
        raise ValueError(f"unknown method {method!r}")

    result = recover_from_measurements(
        y, cfg,
        n_sources=exp.num_sources,
        opts=exp.solver_options(),
        reduce_snapshots=exp.reduce,
        k_reduce=exp.k_reduce,
        group_mode=group_mode,
        eta=exp.eta,
        noise_sigma=exp.noise_sigma,
        eta_slack=exp.eta_slack,
    )
    truth = np.sort(np.asarray(exp.doas_deg, dtype=float))
    est = np.sort(result.doas_deg)
    return {
        "trial": trial,
        "doas_deg": est.tolist(),
        "sq_err": float(np.mean((est - truth) ** 2)),
        "success": bool(np.array_equal(est, truth)),
        "converged": bool(result.report.converged),
        "svd_time_s": result.timings["svd_time_s"],
        "solve_time_s": result.timings["solve_time_s"],
    }


def _run_point(exp: ExperimentConfig, snr_db: float, num_snapshots: int,
               method: str) -> dict:
    trials = [run_trial(exp, snr_db, num_snapshots, t, method)
              for t in range(exp.trials)]
    return _aggregate(trials)


def _worker(args):
    exp_dict, snr_db, num_snapshots, trial, method = args
    exp = ExperimentConfig(**exp_dict)
    return run_trial(exp, snr_db, num_snapshots, trial, method)


def _run_point_parallel(exp: ExperimentConfig, snr_db: float, num_snapshots: int,
                        method: str) -> dict:
    if exp.threads == 1:
        return _run_point(exp, snr_db, num_snapshots, method)
    exp_dict = dataclass_to_dict(exp)
    jobs = [(exp_dict, snr_db, num_snapshots, t, method) for t in range(exp.trials)]
    with ProcessPoolExecutor(max_workers=exp.threads) as pool:
        trials = list(pool.map(_worker, jobs))
    trials.sort(key=lambda r: r["trial"])
    return _aggregate(trials)


def dataclass_to_dict(exp: ExperimentConfig) -> dict:
    return {f.name: getattr(exp, f.name) for f in exp.__dataclass_fields__.values()}


def _aggregate(trials: List[dict]) -> dict:
    sq = np.array([t["sq_err"] for t in trials])
    return {
        "rmse_deg": float(np.sqrt(np.mean(sq))),
        # standard error of the RMSE via the delta method (0 when exact)
        "rmse_se_deg": float(np.std(sq, ddof=1) / np.sqrt(sq.size)
                             / (2.0 * np.sqrt(np.mean(sq)))) if np.mean(sq) > 0 and sq.size > 1 else 0.0,
        "success_rate": float(np.mean([t["success"] for t in trials])),
        "mean_time_s": float(np.mean([t["solve_time_s"] for t in trials])),
        "mean_svd_time_s": float(np.mean([t["svd_time_s"] for t in trials])),
        "mean_solve_time_s": float(np.mean([t["solve_time_s"] for t in trials])),
        "convergence_rate": float(np.mean([t["converged"] for t in trials])),
        "trials": trials,
    }


def sweep_snr(exp: ExperimentConfig, method: str = "mmv") -> SweepResult:
    """RMSE/time/success versus SNR at the configured snapshot count."""
    rows = []
    for snr in exp.snr_grid_db:
        point = _run_point_parallel(exp, snr, exp.num_snapshots, method)
        point["snr_db"] = float(snr)
        rows.append(point)
    return SweepResult(axis_name="snr_db", rows=rows)


def sweep_snapshots(exp: ExperimentConfig, method: str = "mmv") -> SweepResult:
    """RMSE/time/success versus snapshot count at the configured SNR."""
    rows = []
    for l_snap in exp.snapshot_grid:
        point = _run_point_parallel(exp, exp.snr_db, int(l_snap), method)
        point["snapshots"] = int(l_snap)
        rows.append(point)
    return SweepResult(axis_name="snapshots", rows=rows)
