"""Image space operations: actions, gradients, the momentum map, mismatch.

Images are scalar grid fields; their duals are scalar densities that pick up
a jacobian factor under deformation.  The momentum map sends an (image,
density) pair to the vector momentum -density * grad(image).
"""

import numpy as np

from .grid import Grid, gradient, interp_scalar, l2_inner
from .flows import require_diffeomorphism


def deform_image(img, phi_inv, grid):
    """Pull-back I(phi_inv(x)); the caller supplies the already-inverted map."""
    pts = phi_inv.reshape(grid.dim, -1)
    return interp_scalar(img, pts, grid).reshape(grid.shape)


def image_gradient(img, grid):
    return gradient(img, grid)


def infinitesimal_action(u, img, grid):
    """Transport derivative of the image along u: -(grad I) . u."""
    gi = gradient(img, grid)
    return -np.sum(gi * u, axis=0)


def diamond(img, density, grid):
    """Momentum map of the image action: -density * grad(image)."""
    return -density * gradient(img, grid)


def cotangent_action(phi_inv, density, grid):
    """Density pull-back |det D phi^{-1}| density(phi_inv(x)).

    As with deform_image the caller supplies the inverted map; the jacobian
    factor is det(D phi_inv) itself.
    """
    det = require_diffeomorphism(phi_inv, grid, context="cotangent action")
    return det * deform_image(density, phi_inv, grid)


def l2_mismatch(img_a, img_b, grid):
    diff = img_a - img_b
    return l2_inner(diff, diff, grid)


def smooth_image(img, grid, width):
    """Gaussian pre-smoothing (spectral); raw natural images are not smooth
    enough for gradient-based matching."""
    if width <= 0:
        return np.asarray(img, dtype=np.float64)
    sym = np.exp(-0.5 * width**2 * grid.freq_sq())
    return np.fft.ifftn(np.fft.fftn(img) * sym).real


# Synthetic test corpus: smooth periodic images.


def gaussian_blob(grid: Grid, center, width, amplitude=1.0):
    """Periodized gaussian bump; smooth on the torus."""
    x = grid.coords()
    out = np.zeros(grid.shape)
    # three periodic copies per axis cover any width below the cell scale
    shifts = np.array([-1, 0, 1])
    mesh = np.meshgrid(*([shifts] * grid.dim), indexing="ij")
    for offsets in zip(*(m.ravel() for m in mesh)):
        r2 = np.zeros(grid.shape)
        for ax, off in enumerate(offsets):
            d = x[ax] - center[ax] + off * grid.extent[ax]
            r2 += d**2
        out += np.exp(-r2 / (2.0 * width**2))
    return amplitude * out


def bandlimited_field(grid: Grid, rng, max_mode=3, amplitude=1.0, n_components=None):
    """Random smooth periodic field built from a few low Fourier modes."""
    n_components = grid.dim if n_components is None else n_components
    x = grid.coords()
    shape = (n_components,) + grid.shape if n_components > 1 else grid.shape
    out = np.zeros(shape)
    comps = out if n_components > 1 else out[None]
    for c in comps:
        for _ in range(4):
            k = rng.integers(-max_mode, max_mode + 1, size=grid.dim)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.normal() * amplitude
            arg = phase
            for ax in range(grid.dim):
                arg = arg + 2.0 * np.pi * k[ax] * x[ax] / grid.extent[ax]
            c += amp * np.cos(arg)
    return out


def divergence_free_field(grid: Grid, rng, max_mode=3, amplitude=1.0):
    """Random incompressible velocity field (2-d: rotated gradient of a stream)."""
    if grid.dim != 2:
        raise ValueError("only 2-d divergence-free construction provided")
    psi = bandlimited_field(grid, rng, max_mode=max_mode, amplitude=amplitude,
                            n_components=1)
    g = gradient(psi, grid)
    return np.stack([-g[1], g[0]])
