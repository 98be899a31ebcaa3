"""Group structures on the lifted coordinates and the l2,1 machinery.

Three partitions of the m*L*N coordinates are supported:

* ``grid`` (default): one group per grid point j, collecting the m*L
  coordinates {Xt[i, l*N + j]} — the grouping that promotes a K-sparse
  angular spectrum under joint sparsity across snapshots.
* ``row``: one group per row of Xt (the literal sum of row norms).
* ``elementwise``: singleton groups, i.e. a plain l1 norm on moduli.

All groups operate on complex coordinates directly; real and imaginary
parts are never split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

__all__ = ["GroupStructure", "group_norm", "prox_group_l21"]

MODES = ("grid", "row", "elementwise")


@dataclass(frozen=True)
class GroupStructure:
    """A disjoint cover of the m*L*N lifted coordinates by groups."""

    mode: str
    m: int
    L: int
    N: int

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if min(self.m, self.L, self.N) < 1:
            raise ValueError("all dimensions must be positive")

    @property
    def n_coords(self) -> int:
        return self.m * self.L * self.N

    @property
    def num_groups(self) -> int:
        if self.mode == "grid":
            return self.N
        if self.mode == "row":
            return self.m
        return self.n_coords

    def _cube(self, v: np.ndarray) -> np.ndarray:
        # vec index (l*N + j)*m + p  <->  cube[l, j, p]
        return v.reshape(self.L, self.N, self.m)

    def coerce(self, x) -> np.ndarray:
        """Accept a LiftedMatrix, an m x LN matrix, or a flat vector."""
        data = getattr(x, "data", x)
        arr = np.asarray(data, dtype=complex)
        if arr.ndim == 2:
            if arr.shape != (self.m, self.L * self.N):
                raise ValueError(f"expected {self.m} x {self.L * self.N} matrix, got {arr.shape}")
            return arr.ravel(order="F")
        if arr.ndim == 1:
            if arr.size != self.n_coords:
                raise ValueError(f"expected {self.n_coords} coordinates, got {arr.size}")
            return arr
        raise ValueError("expected a matrix or flat coordinate vector")

    def norms(self, v: np.ndarray) -> np.ndarray:
        """Euclidean norm of each group, as a 1-D real array."""
        v = self.coerce(v)
        if self.mode == "elementwise":
            return np.abs(v)
        cube = self._cube(v)
        axes = (0, 2) if self.mode == "grid" else (0, 1)
        return np.sqrt(np.sum(np.abs(cube) ** 2, axis=axes))

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        """Block soft-thresholding: shrink each group's norm by ``tau``."""
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        v = self.coerce(v)
        if tau == 0:
            return v.copy()
        if self.mode == "elementwise":
            mags = np.abs(v)
            scale = np.where(mags > tau, 1.0 - tau / np.maximum(mags, tau), 0.0)
            return v * scale
        cube = self._cube(v)
        axes = (0, 2) if self.mode == "grid" else (0, 1)
        nrm = np.sqrt(np.sum(np.abs(cube) ** 2, axis=axes, keepdims=True))
        scale = np.where(nrm > tau, 1.0 - tau / np.maximum(nrm, tau), 0.0)
        return (cube * scale).reshape(v.size)

    def indices(self) -> List[np.ndarray]:
        """Materialized coordinate index sets, one array per group."""
        all_idx = np.arange(self.n_coords).reshape(self.L, self.N, self.m)
        if self.mode == "grid":
            return [all_idx[:, j, :].ravel() for j in range(self.N)]
        if self.mode == "row":
            return [all_idx[:, :, p].ravel() for p in range(self.m)]
        return [np.array([i]) for i in range(self.n_coords)]


def group_norm(x, groups: GroupStructure) -> float:
    """The mixed l2,1 norm: sum over groups of each group's Euclidean norm."""
    return float(np.sum(groups.norms(groups.coerce(x))))


def prox_group_l21(v: np.ndarray, groups: GroupStructure, tau: float) -> np.ndarray:
    """Proximal map of tau * l2,1; see :meth:`GroupStructure.prox`."""
    return groups.prox(v, tau)
