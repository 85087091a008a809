"""Flow integration: velocity paths to deformations on the periodic grid.

A deformation is stored as absolute positions phi(x), shape (d, *shape); its
displacement phi - x is smooth and periodic, which is what differencing and
interpolation act on.  Velocities between stored frames are interpolated
linearly in time; positions advance with a classic 4th-order one-step method
evaluating the velocity semi-Lagrangian style at the moving points.
"""

from dataclasses import dataclass

import numpy as np

from . import DiffeomorphismError
from .grid import Grid, central_diff, interp_vector


@dataclass
class VelocityPath:
    """Snapshots u_k at uniform times k / n_time, frames shape (N+1, d, *shape)."""

    frames: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != self.grid.dim + 2:
            raise ValueError("frames must have shape (n_time+1, d, *shape)")
        if self.frames.shape[1] != self.grid.dim:
            raise ValueError("component axis does not match grid dimension")
        if self.frames.shape[2:] != self.grid.shape:
            raise ValueError("frame extent does not match grid")
        if self.frames.shape[0] < 2:
            raise ValueError("need at least two frames")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("non-finite velocity frames")

    @classmethod
    def zeros(cls, grid, n_time):
        return cls(np.zeros((n_time + 1, grid.dim) + grid.shape), grid)

    @property
    def n_time(self):
        return self.frames.shape[0] - 1

    @property
    def dt(self):
        return 1.0 / self.n_time

    def at_time(self, t):
        """Piecewise-linear time interpolation of the stored frames."""
        s = t * self.n_time
        k = int(np.floor(s))
        k = min(max(k, 0), self.n_time - 1)
        w = s - k
        if w == 0.0:
            return self.frames[k]
        return (1.0 - w) * self.frames[k] + w * self.frames[k + 1]

    def copy(self):
        return VelocityPath(self.frames.copy(), self.grid)


def identity_map(grid):
    return grid.coords()


def _on_frame_grid(t, n_time):
    s = t * n_time
    return abs(s - round(s)) < 1e-9


def integrate_flow(u: VelocityPath, s, t, substeps=1):
    """Two-time flow map: returns phi_{t,s}, positions of time-s points at time t.

    s and t must lie on the frame grid; t < s integrates backwards.
    """
    g = u.grid
    if not (_on_frame_grid(s, u.n_time) and _on_frame_grid(t, u.n_time)):
        raise ValueError("s and t must lie on the frame time grid")
    phi = identity_map(g)
    if s == t:
        return phi
    n_intervals = int(round(abs(t - s) * u.n_time)) * substeps
    dtau = (t - s) / n_intervals
    pts = phi.reshape(g.dim, -1).copy()
    disp = np.zeros_like(pts)
    for k in range(n_intervals):
        tau = s + k * dtau
        disp = _rk4_advect(u, pts + disp, tau, dtau) + disp
    return (phi.reshape(g.dim, -1) + disp).reshape(phi.shape)


def _rk4_advect(u, pts, tau, dtau):
    g = u.grid

    def vel(time, p):
        return interp_vector(u.at_time(time), p, g)

    k1 = vel(tau, pts)
    k2 = vel(tau + 0.5 * dtau, pts + 0.5 * dtau * k1)
    k3 = vel(tau + 0.5 * dtau, pts + 0.5 * dtau * k2)
    k4 = vel(tau + dtau, pts + dtau * k3)
    return (dtau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def displacement(phi, grid):
    return phi - identity_map(grid)


def compose(phi, psi, grid):
    """Map composition phi(psi(x)), node-wise with periodic interpolation."""
    if phi.shape != psi.shape:
        raise ValueError("deformations must share the carrier grid")
    disp = displacement(phi, grid)
    pts = psi.reshape(grid.dim, -1)
    return psi + interp_vector(disp, pts, grid).reshape(phi.shape)


def jacobian(phi, grid):
    """Jacobian matrices D phi per node, shape (d, d, *shape)."""
    disp = displacement(phi, grid)
    J = np.empty((grid.dim, grid.dim) + grid.shape)
    for i in range(grid.dim):
        for j in range(grid.dim):
            J[i, j] = central_diff(disp[i], j, grid.spacing)
        J[i, i] += 1.0
    return J


def jacobian_det(phi, grid):
    """Determinant of D phi per node (second-order central differences)."""
    J = jacobian(phi, grid)
    d = grid.dim
    if d == 1:
        det = J[0, 0]
    elif d == 2:
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    else:
        det = (
            J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
            - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
            + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
        )
    return det


def require_diffeomorphism(phi, grid, context=""):
    det = jacobian_det(phi, grid)
    m = float(np.min(det))
    if m <= 0.0:
        where = f" in {context}" if context else ""
        raise DiffeomorphismError(
            f"non-positive jacobian determinant (min {m:.3e}){where}"
        )
    return det


def coadjoint_transport(phi, m, grid):
    """Transport of a vector momentum by a deformation.

    Returns (det D phi) (D phi)^T (m o phi); constant along geodesic
    trajectories when evaluated on the co-evolved flow.
    """
    J = jacobian(phi, grid)
    det = jacobian_det(phi, grid)
    pts = phi.reshape(grid.dim, -1)
    m_at = interp_vector(m, pts, grid).reshape(m.shape)
    out = np.einsum("ji...,j...->i...", J, m_at)
    return det * out
