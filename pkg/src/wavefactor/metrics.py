"""Evaluation metrics: partitioned energy, entropy, mode alignment, SVT."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DataError, DegenerateColumnError, DimensionError


@dataclass(frozen=True)
class Partition:
    """Contiguous split of [0, n_space) at the given interior indices."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(v) for v in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if list(b) != sorted(b) or len(set(b)) != len(b):
            raise DimensionError("partition boundaries must be strictly increasing")
        if any(v <= 0 for v in b):
            raise DimensionError("partition boundaries must be positive")

    def slices(self, n_space: int) -> list[slice]:
        if any(v >= n_space for v in self.boundaries):
            raise DimensionError("partition boundary beyond the spatial extent")
        edges = (0,) + self.boundaries + (n_space,)
        return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def partition_energy(D: np.ndarray, partition: Partition, top_m: int,
                     weights: np.ndarray) -> np.ndarray:
    """Per-region energy fractions of the top-weighted columns.

    Columns are ranked by ``weights`` (typically ||D_i X_i'||_F^2), each kept
    column is normalized to unit energy, and each output row sums to 1.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    n = D.shape[1]
    if n == 0:
        raise DimensionError("D has no columns")
    if weights.shape[0] != n:
        raise DimensionError("one weight per column required")
    if not 1 <= top_m <= n:
        raise DimensionError("top_m must be between 1 and the column count")
    order = np.argsort(-weights, kind="stable")[:top_m]
    cols = D[:, order]
    energy = np.sum(cols * cols, axis=0)
    if np.any(energy == 0.0):
        raise DegenerateColumnError("selected column has zero energy")
    slices = partition.slices(D.shape[0])
    fractions = np.empty((top_m, len(slices)))
    for r, sl in enumerate(slices):
        fractions[:, r] = np.sum(cols[sl] * cols[sl], axis=0) / energy
    return fractions


def mean_entropy(energy_fractions: np.ndarray) -> float:
    """Mean binary entropy of two-region energy splits, in [0, 1].

    0 means every column lives in a single region, 1 means every column's
    energy is split evenly.
    """
    f = np.atleast_2d(np.asarray(energy_fractions, dtype=float))
    if f.shape[1] != 2:
        raise DimensionError("expected exactly two regions")
    if np.max(np.abs(f.sum(axis=1) - 1.0)) > 1e-8:
        raise DataError("energy fractions must sum to 1 per row")
    p = np.clip(f[:, 0], 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))
    h = np.nan_to_num(h, nan=0.0)
    return float(np.mean(h))


def mode_error(D_hat: np.ndarray, D_true: np.ndarray) -> float:
    """Percent Frobenius error after optimal column alignment.

    Zero-pads whichever matrix has fewer columns, unit-normalizes the nonzero
    columns of ``D_hat``, resolves each pairwise sign by correlation, and
    permutes columns by optimal assignment before measuring
    100 * ||D_hat - D_true||_F / ||D_true||_F.
    """
    D_hat = np.atleast_2d(np.asarray(D_hat, dtype=float))
    D_true = np.atleast_2d(np.asarray(D_true, dtype=float))
    if D_hat.shape[0] != D_true.shape[0]:
        raise DimensionError("mode matrices must share the spatial dimension")
    true_norm = float(np.linalg.norm(D_true))
    if true_norm == 0.0:
        raise DataError("ground-truth modes are all zero")

    n = max(D_hat.shape[1], D_true.shape[1])
    if D_hat.shape[1] < n:
        D_hat = np.pad(D_hat, ((0, 0), (0, n - D_hat.shape[1])))
    if D_true.shape[1] < n:
        D_true = np.pad(D_true, ((0, 0), (0, n - D_true.shape[1])))

    norms = np.linalg.norm(D_hat, axis=0)
    D_hat = np.where(norms[None, :] > 0, D_hat / np.where(norms == 0, 1.0, norms)[None, :], D_hat)

    overlap = D_hat.T @ D_true
    cost = (np.sum(D_hat * D_hat, axis=0)[:, None]
            + np.sum(D_true * D_true, axis=0)[None, :]
            - 2.0 * np.abs(overlap))
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    aligned = np.empty_like(D_true)
    for i, j in zip(rows, cols):
        sign = 1.0 if overlap[i, j] >= 0 else -1.0
        aligned[:, j] = sign * D_hat[:, i]
    return float(np.linalg.norm(aligned - D_true) / true_norm * 100.0)


def svt_oracle(Y: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form minimizer of 0.5*||Y - Z||_F^2 + lam*||Z||_*.

    Soft-thresholds the singular values of Y at lam; this is the exact
    solution the gamma = 0 solver must reproduce, and doubles as the PCA
    reference at this scale.
    """
    Y = np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(Y)):
        raise DataError("input contains non-finite entries")
    if lam < 0:
        raise DataError("lam must be nonnegative")
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    s = np.maximum(s - lam, 0.0)
    return (U * s) @ Vt
