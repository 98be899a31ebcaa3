"""Uniform linear array model and synthetic scene generation.

The measurement model over L snapshots is

    Y = diag(B h) G X + N

where G is the M x N dictionary of steering vectors on a fixed angular
grid, B is the M x m calibration basis (leading columns of the unitary
DFT matrix, modelling slowly varying per-sensor gain/phase errors),
h holds the unknown calibration coefficients, X is the N x L row-sparse
source matrix (all columns share one support of size K), and N is
circular complex Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "ArrayConfig",
    "Scene",
    "MeasurementSet",
    "steering_vector",
    "build_grid_matrix",
    "build_dft_basis",
    "simulate",
    "gen_scene",
]

# Minimum tolerated |(Bh)_i|: anything below means a effectively dead sensor,
# which the gain/phase perturbation model does not cover.
DEGENERATE_GAIN_TOL = 1e-8

# Angles closer than this (degrees) to a grid point count as on-grid.
GRID_SNAP_TOL = 1e-9


@dataclass
class ArrayConfig:
    """Geometry and dictionary sizes for a uniform linear array.

    Parameters
    ----------
    num_sensors : int
        Number of array elements M.
    spacing_ratio : float
        Element spacing over wavelength, d / lambda.
    grid_angles : ndarray
        Candidate DoA grid in degrees; strictly increasing, inside
        [-90, 90], and longer than the array (N > M so G is fat).
    calib_dim : int
        Dimension m of the calibration subspace, m < M.
    """

    num_sensors: int
    spacing_ratio: float
    grid_angles: np.ndarray
    calib_dim: int

    def __post_init__(self):
        self.grid_angles = np.asarray(self.grid_angles, dtype=float)
        if self.num_sensors < 1:
            raise ValueError("num_sensors must be a positive integer")
        if not (0 < self.calib_dim < self.num_sensors):
            raise ValueError(
                f"calib_dim must satisfy 0 < m < M, got m={self.calib_dim}, M={self.num_sensors}"
            )
        if self.grid_angles.ndim != 1:
            raise ValueError("grid_angles must be one-dimensional")
        if self.grid_angles.size <= self.num_sensors:
            raise ValueError(
                f"grid must be longer than the array (N > M), got N={self.grid_angles.size}, "
                f"M={self.num_sensors}"
            )
        if np.any(np.diff(self.grid_angles) <= 0):
            raise ValueError("grid_angles must be strictly increasing")
        if self.grid_angles[0] < -90.0 or self.grid_angles[-1] > 90.0:
            raise ValueError("grid_angles must lie in [-90, 90] degrees")

    @property
    def n_grid(self) -> int:
        return self.grid_angles.size

    @classmethod
    def default_ula(cls, num_sensors: int = 8, calib_dim: int = 4,
                    spacing_ratio: float = 0.5, grid_step: float = 1.0) -> "ArrayConfig":
        """Standard ULA with a [-90, 90) degree grid (180 points at 1 degree)."""
        grid = np.arange(-90.0, 90.0, grid_step)
        return cls(num_sensors, spacing_ratio, grid, calib_dim)

    def grid_matrix(self) -> np.ndarray:
        return build_grid_matrix(self)

    def dft_basis(self) -> np.ndarray:
        return build_dft_basis(self.num_sensors, self.calib_dim)

    def grid_indices_of(self, doas_deg: Sequence[float]) -> np.ndarray:
        """Map on-grid angles to grid indices; off-grid angles are rejected."""
        doas = np.atleast_1d(np.asarray(doas_deg, dtype=float))
        idx = np.searchsorted(self.grid_angles, doas)
        idx = np.clip(idx, 0, self.n_grid - 1)
        left = np.clip(idx - 1, 0, self.n_grid - 1)
        idx = np.where(
            np.abs(self.grid_angles[left] - doas) < np.abs(self.grid_angles[idx] - doas),
            left, idx,
        )
        if np.any(np.abs(self.grid_angles[idx] - doas) > GRID_SNAP_TOL):
            bad = doas[np.abs(self.grid_angles[idx] - doas) > GRID_SNAP_TOL]
            raise ValueError(f"angles {bad} are not on the grid")
        return idx


@dataclass
class Scene:
    """Ground truth for one synthetic experiment.

    ``source_matrix`` is N x L with exactly K nonzero rows; every column
    shares the same support (joint sparsity). ``true_doas`` holds the K
    ascending angles matching that support.
    """

    true_doas: np.ndarray
    source_matrix: np.ndarray
    calib_coeffs: np.ndarray
    noise_sigma: float

    def __post_init__(self):
        self.true_doas = np.atleast_1d(np.asarray(self.true_doas, dtype=float))
        self.source_matrix = np.asarray(self.source_matrix, dtype=complex)
        self.calib_coeffs = np.asarray(self.calib_coeffs, dtype=complex)
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.source_matrix.ndim != 2:
            raise ValueError("source_matrix must be N x L")
        mask = self.source_matrix != 0
        if not np.all(mask == mask[:, [0]]):
            raise ValueError("all columns of source_matrix must share one support")
        if int(mask[:, 0].sum()) != self.true_doas.size:
            raise ValueError(
                f"source_matrix has {int(mask[:, 0].sum())} active rows but "
                f"{self.true_doas.size} DoAs were given"
            )

    @property
    def num_snapshots(self) -> int:
        return self.source_matrix.shape[1]

    @property
    def num_sources(self) -> int:
        return self.true_doas.size

    @property
    def support(self) -> np.ndarray:
        """Indices of the nonzero rows of the source matrix."""
        return np.flatnonzero(np.any(self.source_matrix != 0, axis=1))


@dataclass
class MeasurementSet:
    """Observed snapshots plus provenance (seed, generating scene if known)."""

    Y: np.ndarray
    rng_seed: int
    scene: Optional[Scene] = None

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=complex)
        if self.Y.ndim != 2:
            raise ValueError("Y must be M x L")
        if self.scene is not None and self.scene.num_snapshots != self.Y.shape[1]:
            raise ValueError("Y and scene disagree on the number of snapshots")

    @property
    def num_sensors(self) -> int:
        return self.Y.shape[0]

    @property
    def num_snapshots(self) -> int:
        return self.Y.shape[1]


def steering_vector(cfg: ArrayConfig, phi_deg: float) -> np.ndarray:
    """Array response for a plane wave from angle ``phi_deg``.

    Entry k (k = 0..M-1) is exp(-1j (k - (M-1)/2) 2 pi (d/lambda) sin(phi)),
    a unit-modulus phase ramp centred on the array.
    """
    if not -90.0 <= phi_deg <= 90.0:
        raise ValueError(f"angle {phi_deg} outside [-90, 90] degrees")
    k = np.arange(cfg.num_sensors) - (cfg.num_sensors - 1) / 2.0
    phase = 2.0 * np.pi * cfg.spacing_ratio * np.sin(np.deg2rad(phi_deg))
    return np.exp(-1j * k * phase)


def build_grid_matrix(cfg: ArrayConfig) -> np.ndarray:
    """Steering dictionary G (M x N); column i is the response at grid angle i."""
    k = np.arange(cfg.num_sensors) - (cfg.num_sensors - 1) / 2.0
    phases = 2.0 * np.pi * cfg.spacing_ratio * np.sin(np.deg2rad(cfg.grid_angles))
    return np.exp(-1j * np.outer(k, phases))


def build_dft_basis(num_sensors: int, calib_dim: int) -> np.ndarray:
    """First ``calib_dim`` columns of the unitary M x M DFT matrix.

    Unitary (1/sqrt(M)) scaling gives orthonormal columns; any fixed column
    scaling is absorbed into the calibration coefficients.
    """
    if calib_dim >= num_sensors:
        raise ValueError(
            f"calib_dim must be smaller than num_sensors, got {calib_dim} >= {num_sensors}"
        )
    k = np.arange(num_sensors)[:, None]
    cols = np.arange(calib_dim)[None, :]
    return np.exp(-2j * np.pi * k * cols / num_sensors) / np.sqrt(num_sensors)


def simulate(cfg: ArrayConfig, scene: Scene, seed: int) -> MeasurementSet:
    """Draw one noisy measurement set Y = diag(Bh) G X + N.

    Noise entries are i.i.d. circular complex Gaussian with per-entry
    variance ``scene.noise_sigma ** 2`` (real and imaginary parts each
    carry half the variance). Deterministic for a fixed seed.
    """
    if scene.source_matrix.shape[0] != cfg.n_grid:
        raise ValueError(
            f"scene source_matrix has {scene.source_matrix.shape[0]} rows but the grid "
            f"has {cfg.n_grid} points"
        )
    if scene.calib_coeffs.size != cfg.calib_dim:
        raise ValueError("scene calib_coeffs length does not match calib_dim")
    cfg.grid_indices_of(scene.true_doas)  # raises if any DoA is off-grid

    d = cfg.dft_basis() @ scene.calib_coeffs
    y = d[:, None] * (cfg.grid_matrix() @ scene.source_matrix)
    if scene.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        shape = y.shape
        noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        y = y + scene.noise_sigma / np.sqrt(2.0) * noise
    return MeasurementSet(Y=y, rng_seed=seed, scene=scene)


def gen_scene(cfg: ArrayConfig, doas_deg: Sequence[float], num_snapshots: int,
              snr_db: float, h_spec: Union[str, Sequence[complex]] = "random",
              seed: int = 0, noise_sigma: float = 1.0) -> Scene:
    """Generate a random scene for the given on-grid DoAs.

    Source rows are i.i.d. circular complex Gaussian with per-entry variance
    10**(snr_db/10), i.e. the SNR is quoted against unit noise variance.
    ``h_spec`` is either the string "random" (i.i.d. complex Gaussian entries
    normalized to unit norm) or an explicit coefficient vector. Calibration
    gains below ``DEGENERATE_GAIN_TOL`` in magnitude are rejected (random
    draws are retried) because a dead sensor leaves no usable measurement.

    Draw order for a given seed: calibration coefficients first (if random),
    then the source matrix.
    """
    doas = np.atleast_1d(np.asarray(doas_deg, dtype=float))
    if np.unique(doas).size != doas.size:
        raise ValueError("duplicate DoAs are not allowed")
    if num_snapshots < 1:
        raise ValueError("num_snapshots must be positive")
    support = cfg.grid_indices_of(doas)
    order = np.argsort(doas)
    doas = doas[order]
    support = support[order]

    rng = np.random.default_rng(seed)
    basis = cfg.dft_basis()
    if isinstance(h_spec, str):
        if h_spec != "random":
            raise ValueError(f"unknown h_spec {h_spec!r}")
        for _ in range(100):
            h = rng.standard_normal(cfg.calib_dim) + 1j * rng.standard_normal(cfg.calib_dim)
            h = h / np.linalg.norm(h)
            if np.min(np.abs(basis @ h)) >= DEGENERATE_GAIN_TOL:
                break
        else:
            raise RuntimeError("could not draw a non-degenerate calibration vector")
    else:
        h = np.asarray(h_spec, dtype=complex)
        if h.shape != (cfg.calib_dim,):
            raise ValueError(f"h_spec must have length {cfg.calib_dim}")
        if np.min(np.abs(basis @ h)) < DEGENERATE_GAIN_TOL:
            raise ValueError("h_spec yields a near-zero calibration gain on some sensor")

    sigma_s = 10.0 ** (snr_db / 20.0)
    k = doas.size
    rows = rng.standard_normal((k, num_snapshots)) + 1j * rng.standard_normal((k, num_snapshots))
    rows = sigma_s / np.sqrt(2.0) * rows
    x = np.zeros((cfg.n_grid, num_snapshots), dtype=complex)
    x[support] = rows
    return Scene(true_doas=doas, source_matrix=x, calib_coeffs=h, noise_sigma=noise_sigma)
