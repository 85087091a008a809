"""Relaxation matching: descent over the whole velocity path.

The energy is the kinetic term of the path plus the weighted endpoint
mismatch.  Its metric gradient per frame is u_t minus the kernel-smoothed
forcing |det D phi_{1,t}| (I0 o phi_t^{-1} - I1 o phi_1 o phi_t^{-1})
grad(I0 o phi_t^{-1}) / sigma^2; descent steps are accepted by Armijo
backtracking, so the energy trace is monotone.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import ConfigError
from .descent import armijo_descent
from .flows import VelocityPath, integrate_flow, require_diffeomorphism
from .images import deform_image, image_gradient, l2_mismatch
from .kernels import apply_K, sobolev_energy

EnergyParts = namedtuple("EnergyParts", "total kinetic mismatch")


@dataclass
class MatchConfig:
    sigma2: float = 1e-2
    n_time: int = 16
    max_iters: int = 200
    step0: float = 1.0
    armijo_c: float = 1e-4
    tol_grad: float = 1e-6

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be > 0")
        if self.n_time < 2:
            raise ConfigError("n_time must be >= 2")
        if not self.step0 > 0:
            raise ConfigError("step0 must be > 0")
        if not 0.0 < self.armijo_c < 1.0:
            raise ConfigError("armijo_c must lie in (0, 1)")


@dataclass
class RelaxState:
    u: VelocityPath
    energy_trace: list
    phi1: np.ndarray
    phi1_inv: np.ndarray
    converged: bool
    message: str


def _trapezoid_weights(n_time):
    w = np.ones(n_time + 1)
    w[0] = w[-1] = 0.5
    return w


def energy(u: VelocityPath, img0, img1, spec, cfg: MatchConfig):
    """Total, kinetic and mismatch parts of the matching energy."""
    g = u.grid
    w = _trapezoid_weights(u.n_time)
    kinetic = 0.5 * u.dt * sum(
        wk * sobolev_energy(spec, u.frames[k], g) for k, wk in enumerate(w)
    )
    phi1_inv = integrate_flow(u, 1.0, 0.0)
    warped = deform_image(img0, phi1_inv, g)
    mismatch = l2_mismatch(warped, img1, g) / (2.0 * cfg.sigma2)
    return EnergyParts(kinetic + mismatch, kinetic, mismatch)


def _forcing_frames(u: VelocityPath, img0, img1, cfg):
    """Per-frame mismatch forcing of the energy derivative."""
    g = u.grid
    forces = []
    for k in range(u.n_time + 1):
        t = k * u.dt
        phi_t_inv = integrate_flow(u, t, 0.0)
        phi_1t = integrate_flow(u, t, 1.0)
        det = require_diffeomorphism(phi_1t, g, context="energy gradient")
        j0 = deform_image(img0, phi_t_inv, g)
        j1 = deform_image(img1, phi_1t, g)
        forces.append(det * (j0 - j1) * image_gradient(j0, g) / cfg.sigma2)
    return forces


def energy_gradient(u: VelocityPath, img0, img1, spec, cfg: MatchConfig):
    """Metric (kernel-smoothed) gradient of the energy, one frame per frame."""
    g = u.grid
    forces = _forcing_frames(u, img0, img1, cfg)
    frames = np.stack(
        [u.frames[k] - apply_K(spec, forces[k], g) for k in range(u.n_time + 1)]
    )
    return VelocityPath(frames, g)


def gradient_squared_norm(grad: VelocityPath, spec):
    """Path norm of the metric gradient (trapezoid in time)."""
    w = _trapezoid_weights(grad.n_time)
    return grad.dt * sum(
        wk * sobolev_energy(spec, grad.frames[k], grad.grid)
        for k, wk in enumerate(w)
    )


def directional_derivative(u, delta, img0, img1, spec, cfg):
    """<DE(u), delta u> under the flat-space pairing; oracle for FD checks."""
    from .kernels import apply_L
    from .grid import l2_inner

    g = u.grid
    forces = _forcing_frames(u, img0, img1, cfg)
    w = _trapezoid_weights(u.n_time)
    total = 0.0
    for k, wk in enumerate(w):
        deriv = apply_L(spec, u.frames[k], g) - forces[k]
        total += wk * u.dt * l2_inner(deriv, delta.frames[k], g)
    return total


def optimize(img0, img1, cfg: MatchConfig, spec, grid=None, u0=None):
    """Armijo-backtracking descent from u0 (zero path by default)."""
    from .kernels import admissibility_report

    if img0.shape != img1.shape:
        raise ValueError("images must share a grid")
    if grid is None:
        grid = _infer_grid(img0, spec)
    report = admissibility_report(spec, cell_scale=min(grid.extent))
    if not report.passed:
        raise ConfigError(
            "kernel fails admissibility: " + "; ".join(report.reasons)
        )
    u = VelocityPath.zeros(grid, cfg.n_time) if u0 is None else u0.copy()

    trace = []

    def value_fn(frames):
        return energy(VelocityPath(frames, grid), img0, img1, spec, cfg).total

    def direction_fn(frames):
        path = VelocityPath(frames, grid)
        grad = energy_gradient(path, img0, img1, spec, cfg)
        return grad.frames, gradient_squared_norm(grad, spec)

    def callback(it, frames, value, rate):
        parts = energy(VelocityPath(frames, grid), img0, img1, spec, cfg)
        trace.append((it, parts.kinetic, parts.mismatch, parts.total, np.sqrt(rate)))

    result = armijo_descent(
        value_fn,
        direction_fn,
        u.frames,
        step0=cfg.step0,
        armijo_c=cfg.armijo_c,
        tol_grad=cfg.tol_grad,
        max_iters=cfg.max_iters,
        callback=callback,
    )
    u_final = VelocityPath(result.x, grid)
    phi1 = integrate_flow(u_final, 0.0, 1.0)
    phi1_inv = integrate_flow(u_final, 1.0, 0.0)
    require_diffeomorphism(phi1, grid, context="final deformation")
    return RelaxState(
        u=u_final,
        energy_trace=trace,
        phi1=phi1,
        phi1_inv=phi1_inv,
        converged=result.converged,
        message=result.message,
    )


def _infer_grid(img, spec):
    from .grid import Grid

    n = img.shape[0]
    return Grid(img.shape, 1.0 / n)
