"""Lifting of the bilinear calibration/signal pair into a linear operator.

Replacing the unknown pair (h, X) by the rank-one matrix

    Xt = h [x_1^T, ..., x_L^T]   (m x LN, snapshot-major columns)

turns the bilinear measurement model into a linear one:

    Y[i, l] = b_i^H Xt Gt_i  restricted to snapshot l,

with ``b_i`` the i-th column of B^H and ``Gt_i`` the LN x L block-diagonal
matrix repeating grid row g_i. This module provides the forward map, its
adjoint, the explicit matrix representation Phi, and the column-major
vectorization conventions tying them together:

    Phi vec(Xt) = vec(A(Xt)^T) = vec(Y^T).

Column c = l*N + j of Xt corresponds to (snapshot l, grid point j), both
zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LiftedMatrix",
    "LiftedOperator",
    "PhiMatrix",
    "DenseBudgetError",
    "make_gtilde",
    "apply_forward",
    "apply_adjoint",
    "build_phi",
    "vec",
    "unvec",
]

# Cap on dense-Phi entries; above this the solver must use the operator form.
DEFAULT_DENSE_BUDGET = 200_000_000


class DenseBudgetError(RuntimeError):
    """Raised when a dense Phi would exceed the configured entry budget."""


@dataclass
class LiftedMatrix:
    """An m x (L*N) matrix in the lifted domain, with its dimensions.

    For an exact lift of (h, X) the matrix has rank one. Column c = l*N + j
    holds h * X[j, l].
    """

    data: np.ndarray
    m: int
    L: int
    N: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.m, self.L * self.N):
            raise ValueError(
                f"lifted matrix must be {self.m} x {self.L * self.N}, got {self.data.shape}"
            )

    @classmethod
    def from_factors(cls, h: np.ndarray, x: np.ndarray) -> "LiftedMatrix":
        """Lift calibration coefficients h (m,) and sources X (N x L)."""
        h = np.asarray(h, dtype=complex).ravel()
        x = np.asarray(x, dtype=complex)
        if x.ndim != 2:
            raise ValueError("x must be N x L")
        n, l = x.shape
        stacked = x.T.reshape(1, l * n)  # [x_1^T, x_2^T, ...]
        return cls(data=h[:, None] * stacked, m=h.size, L=l, N=n)

    def vec(self) -> np.ndarray:
        """Column-major stacking into a length m*L*N vector."""
        return self.data.ravel(order="F")

    def snapshot_blocks(self) -> np.ndarray:
        """View of shape (m, L, N); block l is the lift of snapshot l."""
        return self.data.reshape(self.m, self.L, self.N)


@dataclass
class LiftedOperator:
    """The linear map A : C^{m x LN} -> C^{M x L} defined by B, G and L."""

    B: np.ndarray
    G: np.ndarray
    L: int

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=complex)
        self.G = np.asarray(self.G, dtype=complex)
        if self.B.ndim != 2 or self.G.ndim != 2 or self.B.shape[0] != self.G.shape[0]:
            raise ValueError("B and G must be matrices sharing the sensor dimension")
        if self.L < 1:
            raise ValueError("L must be positive")

    @property
    def M(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def N(self) -> int:
        return self.G.shape[1]

    @property
    def domain_size(self) -> int:
        return self.m * self.L * self.N

    @property
    def range_size(self) -> int:
        return self.M * self.L


@dataclass
class PhiMatrix:
    """Dense matrix representation of the lifted operator.

    Rows i*L..(i+1)*L-1 carry sensor i; columns follow the column-major
    vectorization of the lifted matrix, so Phi @ vec(Xt) == vec(A(Xt)^T).
    """

    matrix: np.ndarray
    M: int
    m: int
    L: int
    N: int


def make_gtilde(g_i: np.ndarray, L: int) -> np.ndarray:
    """Block-diagonal LN x L matrix with the grid row ``g_i`` in each block."""
    if L < 1:
        raise ValueError("L must be positive")
    g_i = np.asarray(g_i, dtype=complex).ravel()
    return np.kron(np.eye(L), g_i[:, None])


def apply_forward(op: LiftedOperator, xt: LiftedMatrix) -> np.ndarray:
    """Evaluate A(Xt): row i, snapshot l is b_i^H Xt[:, l*N:(l+1)*N] g_i."""
    if (xt.m, xt.L, xt.N) != (op.m, op.L, op.N):
        raise ValueError(
            f"lifted matrix dims {(xt.m, xt.L, xt.N)} do not match operator "
            f"{(op.m, op.L, op.N)}"
        )
    blocks = xt.snapshot_blocks()
    t = np.tensordot(op.B, blocks, axes=(1, 0))  # (M, L, N)
    return np.einsum("ilq,iq->il", t, op.G)


def apply_adjoint(op: LiftedOperator, u: np.ndarray) -> LiftedMatrix:
    """Evaluate the adjoint A*(U) = sum_i b_i u_i Gt_i^H for U of shape M x L."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (op.M, op.L):
        raise ValueError(f"U must be {op.M} x {op.L}, got {u.shape}")
    out = np.einsum("ip,il,ij->plj", op.B.conj(), u, op.G.conj(), optimize=True)
    return LiftedMatrix(data=out.reshape(op.m, op.L * op.N), m=op.m, L=op.L, N=op.N)


def build_phi(op: LiftedOperator, max_entries: int = DEFAULT_DENSE_BUDGET) -> PhiMatrix:
    """Assemble the dense (ML) x (mLN) matrix form of the lifted operator.

    Built column-block-wise from the Kronecker identity
    phi_i = conj(Gt_i) (x) b_i, then conjugate-transposed. Raises
    ``DenseBudgetError`` when the entry count exceeds ``max_entries``;
    solve in operator form instead.
    """
    entries = op.range_size * op.domain_size
    if entries > max_entries:
        raise DenseBudgetError(
            f"dense Phi needs {entries} complex entries (> budget {max_entries}); "
            "use the operator form (apply_forward/apply_adjoint)"
        )
    phi_h = np.empty((op.domain_size, op.range_size), dtype=complex)
    for i in range(op.M):
        b_i = op.B[i, :].conj()  # i-th column of B^H
        gtil = make_gtilde(op.G[i, :], op.L)
        phi_h[:, i * op.L:(i + 1) * op.L] = np.kron(gtil.conj(), b_i[:, None])
    return PhiMatrix(matrix=np.ascontiguousarray(phi_h.conj().T),
                     M=op.M, m=op.m, L=op.L, N=op.N)


def vec(xt) -> np.ndarray:
    """Column-major vectorization of a lifted matrix (or any 2-D array)."""
    if isinstance(xt, LiftedMatrix):
        return xt.vec()
    arr = np.asarray(xt)
    if arr.ndim != 2:
        raise ValueError("vec expects a matrix")
    return arr.ravel(order="F")


def unvec(v: np.ndarray, m: int, L: int, N: int) -> LiftedMatrix:
    """Inverse of :func:`vec` for the lifted m x (L*N) shape."""
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != m * L * N:
        raise ValueError(f"vector length {v.size} does not equal m*L*N = {m * L * N}")
    return LiftedMatrix(data=v.reshape((m, L * N), order="F"), m=m, L=L, N=N)
