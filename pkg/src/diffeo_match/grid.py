"""Periodic grid carrier: geometry, differencing and interpolation.

Fields live on a uniform periodic lattice with scalar spacing h.  Scalar
fields have shape ``grid.shape``; vector fields (velocities, momenta,
deformations) carry a leading component axis, shape ``(d, *grid.shape)``.
Deformations store absolute positions; their displacement ``phi - x`` is a
smooth periodic field, which is what all differencing acts on.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend as _backend
from . import _interp_numpy


def _interp_impl():
    if _backend.current_backend() == "numba":
        from . import _interp_numba

        return _interp_numba.interp_periodic
    return _interp_numpy.interp_periodic


@dataclass(frozen=True)
class Grid:
    shape: tuple
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if any(n < 8 for n in self.shape):
            raise ValueError("grid needs at least 8 samples per axis")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def dim(self):
        return len(self.shape)

    @property
    def extent(self):
        """Physical period per axis."""
        return tuple(n * self.spacing for n in self.shape)

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    def coords(self):
        """Node positions, shape (d, *shape)."""
        axes = [np.arange(n) * self.spacing for n in self.shape]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def freqs(self):
        """Angular frequency meshes per axis, each shape (*shape)."""
        axes = [2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing) for n in self.shape]
        return np.meshgrid(*axes, indexing="ij")

    def freq_sq(self):
        out = np.zeros(self.shape)
        for xi in self.freqs():
            out = out + xi**2
        return out


@lru_cache(maxsize=32)
def _lowpass_mask(shape, spacing, frac_cut):
    """Spectral projector zeroing the top frac_cut of frequencies per axis."""
    masks = []
    for n in shape:
        k = np.abs(np.fft.fftfreq(n, d=1.0) * n)
        kmax = n // 2
        masks.append(k <= (1.0 - frac_cut) * kmax)
    mesh = np.meshgrid(*masks, indexing="ij")
    out = np.ones(shape, dtype=bool)
    for m in mesh:
        out &= m
    return out.astype(np.float64)


def lowpass(field, grid, frac_cut):
    """Project out the top frac_cut of the spectrum along every axis."""
    if frac_cut <= 0.0:
        return field
    mask = _lowpass_mask(grid.shape, grid.spacing, float(frac_cut))
    if field.ndim == grid.dim:
        return np.fft.ifftn(np.fft.fftn(field) * mask).real
    return np.stack(
        [np.fft.ifftn(np.fft.fftn(c) * mask).real for c in field]
    )


def central_diff(field, axis, h):
    """Periodic second-order central difference along one axis."""
    return (np.roll(field, -1, axis=axis) - np.roll(field, 1, axis=axis)) / (2.0 * h)


def gradient(field, grid):
    """Gradient of a scalar field, shape (d, *shape)."""
    return np.stack([central_diff(field, ax, grid.spacing) for ax in range(grid.dim)])


def divergence(vfield, grid):
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        out += central_diff(vfield[ax], ax, grid.spacing)
    return out


def interp_scalar(field, pts, grid):
    """Periodic multilinear interpolation of a scalar field.

    pts : (d, m) physical coordinates.
    """
    pts_idx = np.asarray(pts, dtype=np.float64) / grid.spacing
    return _interp_impl()(np.asarray(field, dtype=np.float64), pts_idx)


def interp_vector(vfield, pts, grid):
    """Component-wise interpolation of a (d, *shape) field at (d, m) points."""
    pts_idx = np.asarray(pts, dtype=np.float64) / grid.spacing
    impl = _interp_impl()
    return np.stack(
        [impl(np.asarray(c, dtype=np.float64), pts_idx) for c in vfield]
    )


def l2_inner(a, b, grid):
    """Grid quadrature of the L2 pairing (sums all component axes)."""
    return float(np.sum(a * b) * grid.cell_volume)


def l2_norm(a, grid):
    return float(np.sqrt(max(l2_inner(a, a, grid), 0.0)))
