"""Admissible velocity spaces: smoothing kernel K and its inverse operator L.

Two kinds are supported.  The ``gaussian`` kind is parameterized directly by
the kernel profile exp(-r^2 / 2 width^2); L is defined as the inverse of
convolution by K, realized spectrally.  The ``sobolev`` kind is parameterized
through the operator symbol (1 + alpha^2 |xi|^2)^order; its kernel profile is
the matching Matern function.  On periodic grids both operators are diagonal
in the discrete Fourier basis and exactly mutually inverse.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import kv as _bessel_kv

from . import ConfigError
from .grid import Grid

# Spectral floor for the gaussian inverse symbol: modes where the kernel
# symbol has decayed below this fraction of its peak are not amplified
# further, so FFT roundoff cannot blow up the L-image.  Band-limited fields
# never touch the clamped modes.
_GAUSSIAN_SYMBOL_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    dim: int
    width: float = 0.0  # gaussian length scale
    alpha: float = 0.0  # sobolev length scale
    order: int = 0      # sobolev operator power

    def __post_init__(self):
        if self.kind not in ("gaussian", "sobolev"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ConfigError("kernel dimension must be 1, 2 or 3")
        if self.kind == "gaussian" and not self.width > 0:
            raise ConfigError("gaussian kernel needs width > 0")
        if self.kind == "sobolev":
            if not self.alpha > 0:
                raise ConfigError("sobolev kernel needs alpha > 0")
            if self.order < 1:
                raise ConfigError("sobolev kernel needs order >= 1")


def _matern_profile(spec, r):
    """Normalized radial profile of the sobolev (Matern) kernel, k(0) = 1."""
    nu = spec.order - spec.dim / 2.0
    if nu <= 0:
        raise ConfigError("sobolev profile undefined for order <= dim/2")
    r = np.asarray(r, dtype=np.float64)
    scaled = r / spec.alpha
    out = np.empty_like(scaled)
    small = scaled < 1e-10
    out[small] = 1.0
    s = scaled[~small]
    out[~small] = (2.0 ** (1.0 - nu) / _gamma(nu)) * s**nu * _bessel_kv(nu, s)
    return out


def kernel_profile(spec, r):
    """Scalar radial profile k(r) with k(0) = 1."""
    r = np.asarray(r, dtype=np.float64)
    if spec.kind == "gaussian":
        return np.exp(-(r**2) / (2.0 * spec.width**2))
    return _matern_profile(spec, r)


def kernel_profile_derivative(spec, r):
    """dk/dr; analytic for the gaussian, central differences otherwise."""
    r = np.asarray(r, dtype=np.float64)
    if spec.kind == "gaussian":
        return -r / spec.width**2 * kernel_profile(spec, r)
    eps = 1e-6 * spec.alpha
    return (kernel_profile(spec, r + eps) - kernel_profile(spec, np.abs(r - eps))) / (
        2.0 * eps
    )


def kernel_eval(spec, x, y):
    """Matrix kernel K(x, y): scalar profile times the identity."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.linalg.norm(x - y)
    return float(kernel_profile(spec, r)) * np.eye(spec.dim)


def kernel_symbol(spec, g: Grid):
    """Fourier symbol of K on the grid (symbol of L is its reciprocal)."""
    if g.dim != spec.dim:
        raise ValueError("grid dimension does not match kernel spec")
    xi2 = g.freq_sq()
    if spec.kind == "gaussian":
        peak = (2.0 * math.pi * spec.width**2) ** (spec.dim / 2.0)
        return peak * np.exp(-0.5 * spec.width**2 * xi2)
    return (1.0 + spec.alpha**2 * xi2) ** (-float(spec.order))


def _apply_symbol(field, symbol):
    if field.ndim == symbol.ndim:
        return np.fft.ifftn(np.fft.fftn(field) * symbol).real
    return np.stack([np.fft.ifftn(np.fft.fftn(c) * symbol).real for c in field])


def apply_K(spec, m, g: Grid):
    """Momentum -> velocity: smooth m by the kernel (the sharp map)."""
    m = np.asarray(m, dtype=np.float64)
    return _apply_symbol(m, kernel_symbol(spec, g))


def apply_L(spec, u, g: Grid):
    """Velocity -> momentum: exact grid inverse of apply_K (the flat map)."""
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite velocity field")
    sym = kernel_symbol(spec, g)
    if spec.kind == "gaussian":
        sym = np.maximum(sym, _GAUSSIAN_SYMBOL_FLOOR * sym.flat[0])
    return _apply_symbol(u, 1.0 / sym)


def kernel_matrix(spec, points):
    """Dense (N d, N d) block matrix of kernel evaluations K(q_i, q_j)."""
    q = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if q.shape[1] != spec.dim:
        raise ValueError("points do not match kernel dimension")
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite points")
    diff = q[:, None, :] - q[None, :, :]
    prof = kernel_profile(spec, np.linalg.norm(diff, axis=-1))
    return np.kron(prof, np.eye(spec.dim))


def sobolev_energy(spec, u, g: Grid):
    """<u, u>_L by grid quadrature, evaluated spectrally.

    Parseval form avoids forming the possibly ill-conditioned L-image for
    gaussian kernels at clamped modes.
    """
    u = np.asarray(u, dtype=np.float64)
    sym = kernel_symbol(spec, g)
    if spec.kind == "gaussian":
        sym = np.maximum(sym, _GAUSSIAN_SYMBOL_FLOOR * sym.flat[0])
    n_total = float(np.prod(g.shape))
    comps = u if u.ndim > g.dim else u[None]
    total = 0.0
    for c in comps:
        ch = np.fft.fftn(c)
        total += float(np.sum(np.abs(ch) ** 2 / sym))
    return total * g.cell_volume / n_total


@dataclass(frozen=True)
class AdmissibilityReport:
    passed: bool
    reasons: tuple
    sup_profile: float
    sup_d1: float
    sup_d2: float
    decay_ratio: float

    @property
    def c2_norm_proxy(self):
        return self.sup_profile + self.sup_d1 + self.sup_d2


def admissibility_report(spec, cell_scale=1.0):
    """Check the embedding conditions that make the velocity space usable.

    Sobolev kinds must satisfy order > dim/2 + 1 (the C^1-embedding index);
    the profile and its first two derivatives must be bounded along a sample
    line; and the profile must have decayed at half the periodic cell scale.
    """
    reasons = []
    if spec.kind == "sobolev" and not spec.order > spec.dim / 2.0 + 1.0:
        reasons.append(
            f"order {spec.order} too low for dimension {spec.dim}: "
            f"need order > dim/2 + 1"
        )
        if spec.order <= spec.dim / 2.0:
            # the radial profile itself is undefined; nothing to sample
            return AdmissibilityReport(
                passed=False,
                reasons=tuple(reasons),
                sup_profile=np.inf,
                sup_d1=np.inf,
                sup_d2=np.inf,
                decay_ratio=np.inf,
            )
    scale = spec.width if spec.kind == "gaussian" else spec.alpha
    r = np.linspace(0.0, max(10.0 * scale, cell_scale), 4001)
    k = kernel_profile(spec, r)
    dr = r[1] - r[0]
    d1 = np.gradient(k, dr)
    d2 = np.gradient(d1, dr)
    sup_k = float(np.max(np.abs(k)))
    sup_d1 = float(np.max(np.abs(d1)))
    sup_d2 = float(np.max(np.abs(d2)))
    if not np.all(np.isfinite([sup_k, sup_d1, sup_d2])):
        reasons.append("profile or derivatives unbounded along sample line")
    decay = float(kernel_profile(spec, np.array(cell_scale / 2.0)))
    if not decay <= 0.1:
        reasons.append(
            f"profile has not decayed at half the cell scale "
            f"({decay:.3g} at r = {cell_scale / 2:.3g})"
        )
    return AdmissibilityReport(
        passed=not reasons,
        reasons=tuple(reasons),
        sup_profile=sup_k,
        sup_d1=sup_d1,
        sup_d2=sup_d2,
        decay_ratio=decay,
    )
