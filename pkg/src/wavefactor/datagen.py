"""Synthetic wave datasets: harmonic strings and a two-material line.

The string generator samples a superposition of standing modes

    y(l, t) = sum_n a_n * exp(-alpha_n t) * exp(-beta_n l)
              * sin(n k0 l) * sin(n w0 t) + noise

at t = j*dt and the interior grid l = (m+1)*dl: the clamped ends sit at
l = 0 and l = (rows+1)*dl and are not part of the measurement, so with
k0 = 2*pi/length the undamped modes are exact discrete eigenmodes of the
matching Dirichlet operator.  Damping may act in time or in space but not
both.  Noise comes from a counter-based generator (Philox) so fields are
bit-reproducible across platforms.

The line generator runs a leapfrog simulation of d2y/dt2 = c(l)^2 d2y/dl2
with piecewise-constant speed, a modulated-Gaussian source at the left end,
and partially absorbing ends.  A speed step at an interface reflects with
amplitude (k1 - k2)/(k1 + k2) for per-segment wavenumbers k = w/c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DataError, DimensionError, GridError, StabilityError
from .objective import WaveField


@dataclass(frozen=True)
class StringSpec:
    """Fixed-string dataset parameters; vectors all have length num_modes."""

    num_modes: int
    k0: float
    omega0: float
    amplitudes: tuple[float, ...]
    damp_time: tuple[float, ...]
    damp_space: tuple[float, ...]
    noise_var: float
    rows: int
    cols: int
    dl: float
    dt: float
    seed: int = 0

    def __post_init__(self):
        r = self.num_modes
        if r < 1:
            raise DimensionError("need at least one mode")
        for name in ("amplitudes", "damp_time", "damp_space"):
            vec = tuple(float(v) for v in getattr(self, name))
            if len(vec) != r:
                raise DimensionError(f"{name} must have length {r}")
            object.__setattr__(self, name, vec)
        if any(a < 0 for a in self.damp_time) or any(b < 0 for b in self.damp_space):
            raise DataError("damping factors must be nonnegative")
        if any(self.damp_time) and any(self.damp_space):
            raise DataError("damping may act in time or in space, not both")
        if self.noise_var < 0:
            raise DataError("noise variance must be nonnegative")
        if self.rows < 2 or self.cols < 2 or self.dl <= 0 or self.dt <= 0:
            raise GridError("invalid grid")
        if self.k0 <= 0 or self.omega0 <= 0:
            raise DataError("base wavenumber and frequency must be positive")

    @classmethod
    def harmonic(cls, num_modes: int, amplitude: float = 10.0, k0: float = 2 * math.pi,
                 omega0: float = 12 * math.pi, damp_time_scale: float = 0.0,
                 damp_space_scale: float = 0.0, noise_var: float = 0.0,
                 rows: int = 200, cols: int = 400, dl: Optional[float] = None,
                 dt: Optional[float] = None, seed: int = 0) -> "StringSpec":
        """Equal-amplitude harmonics with damping alpha_n = scale*n."""
        n = np.arange(1, num_modes + 1, dtype=float)
        return cls(num_modes=num_modes, k0=k0, omega0=omega0,
                   amplitudes=tuple([float(amplitude)] * num_modes),
                   damp_time=tuple(damp_time_scale * n),
                   damp_space=tuple(damp_space_scale * n),
                   noise_var=noise_var, rows=rows, cols=cols,
                   dl=1.0 / (rows + 1) if dl is None else dl,
                   dt=1.0 / cols if dt is None else dt, seed=seed)


def gen_string(spec: StringSpec) -> tuple[WaveField, np.ndarray]:
    """Sample the string model; returns the field and the true spatial modes.

    The n-th ground-truth column is the unit-normalized spatial profile
    exp(-beta_n l) * sin(n k0 l), i.e. it keeps any spatial damping.
    """
    pos = (np.arange(spec.rows) + 1) * spec.dl
    times = np.arange(spec.cols) * spec.dt
    Y = np.zeros((spec.rows, spec.cols))
    D_true = np.zeros((spec.rows, spec.num_modes))
    for i in range(spec.num_modes):
        n = i + 1
        spatial = np.exp(-spec.damp_space[i] * pos) * np.sin(n * spec.k0 * pos)
        temporal = np.exp(-spec.damp_time[i] * times) * np.sin(n * spec.omega0 * times)
        Y += spec.amplitudes[i] * np.outer(spatial, temporal)
        nrm = np.linalg.norm(spatial)
        D_true[:, i] = spatial / nrm if nrm > 0 else spatial
    if spec.noise_var > 0:
        rng = np.random.Generator(np.random.Philox(spec.seed))
        Y = Y + rng.normal(0.0, math.sqrt(spec.noise_var), size=Y.shape)
    return WaveField(Y=Y, dl=spec.dl, dt=spec.dt), D_true


@dataclass(frozen=True)
class LineSpec:
    """Two-or-more-segment line parameters for the leapfrog simulator.

    ``wavenumber_ratios`` holds one positive value per segment; segment speeds
    scale as the inverse ratio so a ratio-4 segment carries 4x the wavenumber.
    ``wave_speed`` is the speed of the first segment; leave it None to place
    the fastest segment at CFL number 0.9.
    """

    segment_boundaries: tuple[float, ...]
    wavenumber_ratios: tuple[float, ...]
    center_freq: float
    bandwidth: float
    boundary_loss: float
    rows: int
    cols: int
    dl: float
    dt: float
    wave_speed: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.segment_boundaries)
        ratios = tuple(float(r) for r in self.wavenumber_ratios)
        object.__setattr__(self, "segment_boundaries", bounds)
        object.__setattr__(self, "wavenumber_ratios", ratios)
        if self.rows < 3 or self.cols < 2 or self.dl <= 0 or self.dt <= 0:
            raise GridError("invalid grid")
        length = (self.rows - 1) * self.dl
        if list(bounds) != sorted(bounds) or any(
                not 0.0 < b < length for b in bounds):
            raise GridError("segment boundaries must be sorted inside the line")
        if len(ratios) != len(bounds) + 1:
            raise DimensionError("need one wavenumber ratio per segment")
        if any(r <= 0 for r in ratios):
            raise DataError("wavenumber ratios must be positive")
        if not 0.0 <= self.boundary_loss <= 1.0:
            raise DataError("boundary_loss must lie in [0, 1]")
        if self.center_freq <= 0 or self.bandwidth <= 0:
            raise DataError("excitation frequency and bandwidth must be positive")
        if self.wave_speed is not None and self.wave_speed <= 0:
            raise DataError("wave_speed must be positive")

    def speeds(self) -> np.ndarray:
        """Per-cell propagation speed; checks the CFL condition."""
        ratios = np.asarray(self.wavenumber_ratios)
        if self.wave_speed is None:
            c0 = 0.9 * (self.dl / self.dt) * float(np.min(ratios)) / ratios[0]
        else:
            c0 = float(self.wave_speed)
        seg_speeds = c0 * ratios[0] / ratios
        if float(np.max(seg_speeds)) * self.dt / self.dl > 1.0 + 1e-12:
            raise StabilityError(
                f"CFL violated: c*dt/dl = {float(np.max(seg_speeds)) * self.dt / self.dl:.3f}")
        pos = np.arange(self.rows) * self.dl
        seg = np.searchsorted(np.asarray(self.segment_boundaries), pos, side="right")
        return seg_speeds[seg]


def _modulated_gaussian(times: np.ndarray, center_freq: float,
                        bandwidth: float) -> np.ndarray:
    # -3 dB full width `bandwidth` of the magnitude spectrum
    sigma_f = bandwidth / (2.0 * math.sqrt(math.log(2.0)))
    sigma_t = 1.0 / (2.0 * math.pi * sigma_f)
    t0 = 4.0 * sigma_t
    return np.exp(-0.5 * ((times - t0) / sigma_t) ** 2) * np.sin(
        2.0 * math.pi * center_freq * (times - t0))


def gen_line(spec: LineSpec) -> WaveField:
    """Simulate the piecewise-speed line and return its snapshot matrix."""
    speeds = spec.speeds()
    courant2 = (speeds * spec.dt / spec.dl) ** 2
    times = np.arange(spec.cols) * spec.dt
    source = _modulated_gaussian(times, spec.center_freq, spec.bandwidth)
    # source amplitude normalized so snapshots are O(1)
    source = source / (spec.dt**2)

    def mur_coef(c: float) -> float:
        return (c * spec.dt - spec.dl) / (c * spec.dt + spec.dl)

    Y = _kernels.fdtd_evolve(courant2, source, src_index=1,
                             boundary_loss=spec.boundary_loss,
                             mur_left=mur_coef(float(speeds[0])),
                             mur_right=mur_coef(float(speeds[-1])),
                             dt=spec.dt)
    if not np.all(np.isfinite(Y)):
        raise DataError("simulation produced non-finite values")
    return WaveField(Y=Y, dl=spec.dl, dt=spec.dt)


def subsample_rows(field: WaveField, observed_positions: Sequence[int]) -> WaveField:
    """Mask the field so only the listed spatial rows count as observed."""
    rows = list(observed_positions)
    if not rows:
        raise DataError("need at least one observed row")
    n_space = field.shape[0]
    if any(int(r) != r or not 0 <= r < n_space for r in rows):
        raise DataError("observed row indices out of range")
    mask = np.zeros(field.shape)
    mask[np.asarray(rows, dtype=int), :] = 1.0
    return WaveField(Y=field.Y, dl=field.dl, dt=field.dt, mask=mask)
