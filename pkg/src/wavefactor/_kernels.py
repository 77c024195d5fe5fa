"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

Two kernels dominate runtime: the wavenumber grid sweep inside the polar line
search, and the leapfrog time loop of the 1-D wave simulator.  Both carry an
``@njit`` version and a vectorised numpy fallback computing the same per-point
recurrences.  Set ``WAVEFACTOR_NO_NUMBA=1`` (or install without numba) to force
the numpy path; ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("WAVEFACTOR_NO_NUMBA", "").lower() in ("1", "true", "yes")

HAS_NUMBA = False
if not _DISABLED:
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep in practice
        pass

# Power-iteration controls shared by both paths.  The sweep only has to locate
# the best bracket of the line search; the refinement stage re-evaluates the
# winning bracket with a dense eigensolver, so bracket-level accuracy suffices.
# Near-degenerate tops converge slowly in the eigenvector but the Rayleigh
# value is then already pinched inside the cluster, so a modest cap is safe.
_PI_TOL = 1e-8
_PI_MAXITER = 80


# ---------------------------------------------------------------------------
# spectral sweep: f(kbar) = max singular value of diag(w(kbar)) @ B,
# computed as sqrt(lambda_max(W G W)) with G = B B^T precomputed.
# ---------------------------------------------------------------------------

def _sweep_numpy(G: np.ndarray, eigvals: np.ndarray, gamma: float,
                 kbars: np.ndarray) -> np.ndarray:
    n = kbars.shape[0]
    size = G.shape[0]
    diag_g = np.diag(G)
    out = np.zeros(n)

    # weights per grid point, shape (n, size)
    W = 1.0 / np.sqrt(1.0 + gamma * (kbars[:, None] + eigvals[None, :]) ** 2)

    diag_m = W * W * diag_g[None, :]
    start = np.argmax(diag_m, axis=1)
    live = diag_m[np.arange(n), start] > 0.0
    if not np.any(live):
        return out
    lam = np.zeros(n)

    V = np.zeros((n, size))
    V[np.arange(n), start] = 1.0

    for _ in range(_PI_MAXITER):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        Wl = W[idx]
        U = (Wl * V[idx]) @ G
        U *= Wl
        lam_new = np.einsum("ij,ij->i", V[idx], U)
        nrm = np.linalg.norm(U, axis=1)
        ok = nrm > 0.0
        V[idx[ok]] = U[ok] / nrm[ok, None]
        conv = np.abs(lam_new - lam[idx]) <= _PI_TOL * np.abs(lam_new)
        lam[idx] = lam_new
        live[idx[conv | ~ok]] = False
    return np.sqrt(np.maximum(lam, 0.0))


if HAS_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _sweep_numba(G, eigvals, gamma, kbars):  # pragma: no cover - jitted
        n = kbars.shape[0]
        size = G.shape[0]
        out = np.zeros(n)
        for p in numba.prange(n):
            w = np.empty(size)
            for i in range(size):
                w[i] = 1.0 / np.sqrt(1.0 + gamma * (kbars[p] + eigvals[i]) ** 2)
            best = 0
            top = 0.0
            for i in range(size):
                d = w[i] * w[i] * G[i, i]
                if d > top:
                    top = d
                    best = i
            if top <= 0.0:
                out[p] = 0.0
                continue
            lam = 0.0
            v = np.zeros(size)
            v[best] = 1.0
            t = np.empty(size)
            u = np.empty(size)
            for _ in range(_PI_MAXITER):
                for i in range(size):
                    t[i] = w[i] * v[i]
                for i in range(size):
                    acc = 0.0
                    for j in range(size):
                        acc += G[i, j] * t[j]
                    u[i] = w[i] * acc
                lam_new = 0.0
                nrm2 = 0.0
                for i in range(size):
                    lam_new += v[i] * u[i]
                    nrm2 += u[i] * u[i]
                if nrm2 == 0.0:
                    lam = 0.0
                    break
                inv = 1.0 / np.sqrt(nrm2)
                for i in range(size):
                    v[i] = u[i] * inv
                if abs(lam_new - lam) <= _PI_TOL * abs(lam_new):
                    lam = lam_new
                    break
                lam = lam_new
            out[p] = np.sqrt(max(lam, 0.0))
        return out


def spectral_sweep(G: np.ndarray, eigvals: np.ndarray, gamma: float,
                   kbars: np.ndarray) -> np.ndarray:
    """Evaluate the line-search objective on a grid of kbar values.

    Each grid point runs an independent power iteration from a deterministic
    start vector, so results do not depend on evaluation order or chunking.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    eigvals = np.ascontiguousarray(eigvals, dtype=np.float64)
    kbars = np.ascontiguousarray(kbars, dtype=np.float64)
    if HAS_NUMBA:
        return _sweep_numba(G, eigvals, float(gamma), kbars)
    return _sweep_numpy(G, eigvals, float(gamma), kbars)


# ---------------------------------------------------------------------------
# leapfrog FDTD for d2y/dt2 = c(x)^2 d2y/dx2 with soft source injection
# ---------------------------------------------------------------------------

def _fdtd_numpy(courant2: np.ndarray, source: np.ndarray, src_index: int,
                boundary_loss: float, mur_left: float, mur_right: float,
                dt: float) -> np.ndarray:
    size = courant2.shape[0]
    steps = source.shape[0]
    field = np.zeros((size, steps))
    y_prev = np.zeros(size)
    y = np.zeros(size)
    dt2 = dt * dt
    for n in range(steps):
        field[:, n] = y
        y_next = np.empty(size)
        y_next[1:-1] = (2.0 * y[1:-1] - y_prev[1:-1]
                        + courant2[1:-1] * (y[2:] - 2.0 * y[1:-1] + y[:-2]))
        y_next[src_index] += dt2 * source[n]
        # one-way (Mur) updates blended toward rigid ends by boundary_loss
        y_next[0] = boundary_loss * (y[1] + mur_left * (y_next[1] - y[0]))
        y_next[-1] = boundary_loss * (y[-2] + mur_right * (y_next[-2] - y[-1]))
        y_prev, y = y, y_next
    return field


if HAS_NUMBA:

    @numba.njit(cache=True)
    def _fdtd_numba(courant2, source, src_index, boundary_loss, mur_left,
                    mur_right, dt):  # pragma: no cover - jitted
        size = courant2.shape[0]
        steps = source.shape[0]
        field = np.zeros((size, steps))
        y_prev = np.zeros(size)
        y = np.zeros(size)
        dt2 = dt * dt
        for n in range(steps):
            for i in range(size):
                field[i, n] = y[i]
            y_next = np.empty(size)
            for i in range(1, size - 1):
                y_next[i] = (2.0 * y[i] - y_prev[i]
                             + courant2[i] * (y[i + 1] - 2.0 * y[i] + y[i - 1]))
            y_next[src_index] += dt2 * source[n]
            y_next[0] = boundary_loss * (y[1] + mur_left * (y_next[1] - y[0]))
            y_next[size - 1] = boundary_loss * (
                y[size - 2] + mur_right * (y_next[size - 2] - y[size - 1]))
            y_prev, y = y, y_next
        return field


def fdtd_evolve(courant2: np.ndarray, source: np.ndarray, src_index: int,
                boundary_loss: float, mur_left: float, mur_right: float,
                dt: float) -> np.ndarray:
    """Run the leapfrog scheme and return the (space x time) snapshot matrix."""
    courant2 = np.ascontiguousarray(courant2, dtype=np.float64)
    source = np.ascontiguousarray(source, dtype=np.float64)
    if HAS_NUMBA:
        return _fdtd_numba(courant2, source, int(src_index), float(boundary_loss),
                           float(mur_left), float(mur_right), float(dt))
    return _fdtd_numpy(courant2, source, int(src_index), float(boundary_loss),
                       float(mur_left), float(mur_right), float(dt))


def configure_threads(n: int) -> None:
    """Cap numba's thread pool; no-op on the numpy path."""
    if HAS_NUMBA and n > 0:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))
