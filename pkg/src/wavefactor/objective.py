"""Factorization objective: loss, per-column wave penalty, and gradients.

The model approximates a space-by-time measurement matrix Y as D @ X.T where
every column of D is pushed toward a single-wavenumber profile by the penalty
``gamma * ||L d + k^2 d||^2``.  A squared Frobenius term on both factors keeps
the number of active columns small.  A binary mask restricts the loss to
observed entries for completion problems; its adjoint is zero-filling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, DegenerateColumnError, DimensionError
from .laplacian import SpatialOperator


@dataclass(frozen=True)
class WaveField:
    """Observed space x time samples with grid spacings and optional mask."""

    Y: np.ndarray
    dl: float
    dt: float
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        object.__setattr__(self, "Y", Y)
        if Y.ndim != 2:
            raise DimensionError("Y must be a 2-D array")
        if self.dl <= 0 or self.dt <= 0:
            raise DimensionError("grid spacings must be positive")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=float)
            if mask.shape != Y.shape:
                raise DimensionError("mask shape must match Y")
            if not np.all((mask == 0.0) | (mask == 1.0)):
                raise DataError("mask entries must be 0 or 1")
            if not mask.any():
                raise DataError("mask has no observed entries")
            object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.Y.shape

    def mask_or_ones(self) -> np.ndarray:
        if self.mask is None:
            return np.ones_like(self.Y)
        return self.mask


@dataclass(frozen=True)
class FactorModel:
    """Factors D (space x N), X (time x N) and per-column wavenumbers k."""

    D: np.ndarray
    X: np.ndarray
    k: np.ndarray
    gamma: float
    lam: float

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        k = np.atleast_1d(np.asarray(self.k, dtype=float))
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "k", k)
        if D.shape[1] != X.shape[1] or D.shape[1] != k.shape[0]:
            raise DimensionError("D, X and k disagree on the number of columns")
        for arr in (D, X, k):
            if not np.all(np.isfinite(arr)):
                raise DataError("factor entries must be finite")
        if np.any(k < 0):
            raise DataError("wavenumbers must be nonnegative")
        if self.gamma < 0 or self.lam <= 0:
            raise DataError("need gamma >= 0 and lam > 0")

    @property
    def rank(self) -> int:
        return self.D.shape[1]

    def product(self) -> np.ndarray:
        return self.D @ self.X.T

    @classmethod
    def empty(cls, n_space: int, n_time: int, gamma: float, lam: float) -> "FactorModel":
        return cls(D=np.zeros((n_space, 0)), X=np.zeros((n_time, 0)),
                   k=np.zeros(0), gamma=gamma, lam=lam)


def wave_residual(op: SpatialOperator, D: np.ndarray, k: np.ndarray) -> np.ndarray:
    """(L + k_j^2 I) applied column-wise: L @ D + D * k^2."""
    return op.apply(D) + D * (np.asarray(k, dtype=float) ** 2)[None, :]


def regularizer_column(d: np.ndarray, x: np.ndarray, k: float,
                       op: SpatialOperator, gamma: float) -> float:
    """Per-column penalty 0.5*(||x||^2 + ||d||^2) + gamma*||L d + k^2 d||^2."""
    d = np.asarray(d, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if d.shape[0] != op.size:
        raise DimensionError("column length must equal the operator size")
    r = op.apply(d) + (k**2) * d
    return float(0.5 * (x @ x + d @ d) + gamma * (r @ r))


def optimal_k(d: np.ndarray, op: SpatialOperator) -> float:
    """Closed-form minimizer of ||L d + k^2 d||^2 over k >= 0.

    The optimum is the Rayleigh quotient sqrt(-d'Ld / ||d||^2), which always
    lies in [0, 2/dl] because the operator spectrum sits in [-4/dl^2, 0].
    """
    d = np.asarray(d, dtype=float).ravel()
    if d.shape[0] != op.size:
        raise DimensionError("column length must equal the operator size")
    nrm2 = d @ d
    if nrm2 == 0.0:
        raise DegenerateColumnError("cannot compute a wavenumber for a zero column")
    kbar = -(d @ op.apply(d)) / nrm2
    return float(np.sqrt(max(kbar, 0.0)))


def _check_shapes(model: FactorModel, field: WaveField, op: SpatialOperator) -> None:
    n_space, n_time = field.shape
    if model.D.shape[0] != n_space or model.X.shape[0] != n_time:
        raise DimensionError("model factors do not match the field shape")
    if op.size != n_space:
        raise DimensionError("operator size does not match the field rows")


def objective_value(model: FactorModel, field: WaveField, op: SpatialOperator) -> float:
    """0.5*||A(Y - DX')||_F^2 + (lam/2) * sum_i (||X_i||^2 + ||D_i||^2
    + gamma*||L D_i + k_i^2 D_i||^2), with A the mask projection."""
    _check_shapes(model, field, op)
    mask = field.mask_or_ones()
    resid = mask * (field.Y - model.product())
    loss = 0.5 * float(np.sum(resid * resid))
    if model.rank == 0:
        return loss
    wave = wave_residual(op, model.D, model.k)
    reg = (float(np.sum(model.X * model.X)) + float(np.sum(model.D * model.D))
           + model.gamma * float(np.sum(wave * wave)))
    return loss + 0.5 * model.lam * reg


def gradients(model: FactorModel, field: WaveField,
              op: SpatialOperator) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of ``objective_value`` w.r.t. D and X.

    grad_D = A*(DX' - Y) X + lam*D + lam*gamma*(L + k^2 I)^2 D applied
    column-wise, grad_X = A*(DX' - Y)' D + lam*X.  The squared operator is
    applied as two successive tridiagonal products, never formed densely.
    """
    _check_shapes(model, field, op)
    if model.rank == 0:
        return np.zeros_like(model.D), np.zeros_like(model.X)
    mask = field.mask_or_ones()
    err = mask * (model.product() - field.Y)
    wave2 = wave_residual(op, wave_residual(op, model.D, model.k), model.k)
    grad_d = err @ model.X + model.lam * model.D + model.lam * model.gamma * wave2
    grad_x = err.T @ model.D + model.lam * model.X
    return grad_d, grad_x
