"""Discrete second-derivative operators and their spectral machinery.

The operator is a symmetric tridiagonal matrix whose interior rows hold the
standard (1, -2, 1)/dl^2 stencil; the first and last rows encode the boundary
condition.  The eigendecomposition is computed once at construction and reused
by every downstream wavenumber evaluation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridError


class BoundaryCondition(enum.Enum):
    """End-row stencil of the second-difference matrix.

    DIRICHLET pins both ends (end rows -2, 1); NEUMANN uses zero-slope ends
    (end rows -1, 1); DIRICHLET_NEUMANN pins the left end and leaves the
    right end free.
    """

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    DIRICHLET_NEUMANN = "dirichlet-neumann"

    @classmethod
    def from_name(cls, name: str) -> "BoundaryCondition":
        for bc in cls:
            if bc.value == name.lower():
                return bc
        raise ValueError(f"unknown boundary condition {name!r}")


@dataclass(frozen=True)
class SpatialOperator:
    """Second-difference matrix with cached eigendecomposition.

    Immutable after construction; the arrays are marked read-only so the
    operator can be shared freely across threads.
    """

    size: int
    dl: float
    bc: BoundaryCondition
    matrix: np.ndarray   # (size, size) symmetric tridiagonal
    eigvecs: np.ndarray  # orthogonal, columns are eigenvectors
    eigvals: np.ndarray  # ascending, all in [-4/dl^2, 0]

    @property
    def bands(self) -> tuple[np.ndarray, np.ndarray]:
        """(main diagonal, first superdiagonal) of the matrix."""
        return np.diag(self.matrix), np.diag(self.matrix, 1)

    @property
    def eigvals_unit(self) -> np.ndarray:
        """Eigenvalues rescaled to unit grid spacing (range [-4, 0])."""
        return self.eigvals * self.dl**2

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        """Multiply by the operator using its tridiagonal bands."""
        main, off = self.bands
        v = np.asarray(vecs, dtype=float)
        out = main.reshape(-1, *([1] * (v.ndim - 1))) * v
        out[:-1] += off.reshape(-1, *([1] * (v.ndim - 1))) * v[1:]
        out[1:] += off.reshape(-1, *([1] * (v.ndim - 1))) * v[:-1]
        return out


def build(size: int, dl: float, bc: BoundaryCondition = BoundaryCondition.DIRICHLET) -> SpatialOperator:
    """Construct the operator for ``size`` samples at spacing ``dl``.

    Raises:
        DimensionError: size < 2 (a second difference needs two samples).
        GridError: non-positive spacing.
    """
    if int(size) != size or size < 2:
        raise DimensionError(f"operator needs size >= 2, got {size}")
    if not np.isfinite(dl) or dl <= 0:
        raise GridError(f"grid spacing must be positive, got {dl}")
    size = int(size)
    dl = float(dl)

    main = np.full(size, -2.0)
    off = np.ones(size - 1)
    if bc is BoundaryCondition.NEUMANN:
        main[0] = -1.0
        main[-1] = -1.0
    elif bc is BoundaryCondition.DIRICHLET_NEUMANN:
        main[-1] = -1.0
    matrix = (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / dl**2

    eigvals, eigvecs = np.linalg.eigh(matrix)
    for arr in (matrix, eigvals, eigvecs):
        arr.setflags(write=False)
    return SpatialOperator(size=size, dl=dl, bc=bc, matrix=matrix,
                           eigvecs=eigvecs, eigvals=eigvals)


def shifted_metric(op: SpatialOperator, kbar: float, gamma: float) -> np.ndarray:
    """Quadratic-form matrix I + gamma*(kbar*I + L)^2 of the wave constraint.

    Assembled in the eigenbasis so repeated kbar evaluations stay cheap.
    All eigenvalues are >= 1, so the matrix is positive definite.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    diag = 1.0 + gamma * (kbar + op.eigvals) ** 2
    return (op.eigvecs * diag) @ op.eigvecs.T


def filter_response(kbar: float, gamma: float, eigval: float) -> float:
    """Diagonal attenuation coefficient 1/sqrt(1 + gamma*(kbar + eigval)^2).

    This is the first-order Butterworth response of the wave penalty seen in
    the operator's eigenbasis: unit gain where eigval = -kbar, -3 dB where
    |kbar + eigval| = 1/sqrt(gamma).
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return float(1.0 / np.sqrt(1.0 + gamma * (kbar + eigval) ** 2))
