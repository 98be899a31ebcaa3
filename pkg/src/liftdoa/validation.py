"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

__all__ = ["check_snapshot_matrix", "check_positive_int", "check_grid"]


def check_snapshot_matrix(x, min_snapshots: int = 1) -> np.ndarray:
    """Validate a (n_snapshots, n_sensors) complex data matrix."""
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D snapshot matrix, got ndim={arr.ndim}")
    if arr.shape[0] < min_snapshots:
        raise ValueError(f"need at least {min_snapshots} snapshot(s), got {arr.shape[0]}")
    if arr.shape[1] < 2:
        raise ValueError("need at least two sensors")
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError("snapshot matrix contains non-finite entries")
    return arr


def check_positive_int(value, name: str) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_grid(grid_angles) -> np.ndarray:
    grid = np.asarray(grid_angles, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid_angles must be a 1-D array with at least two angles")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid_angles must be strictly increasing")
    if grid[0] < -90.0 or grid[-1] > 90.0:
        raise ValueError("grid_angles must lie in [-90, 90] degrees")
    return grid
