"""Rotation-group testbed for the group-action calculus.

SO(3) acting on R^3 is small enough that every identity used by the grid
solvers (adjoint/coadjoint composition, equivariance of the momentum map,
the flow-variation formula, geodesic norm conservation) has a closed-form
or finite-difference oracle.  The hat map fixes hat(e_x) e_y = e_z, which
turns the algebra bracket into the cross product.

Convention: the Euclidean dot product pairs dual vectors with algebra
vectors; every identity checked here is independent of that normalization.
"""

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline


def hat(w):
    """3-vector -> skew matrix with hat(u) v = u x v."""
    w = np.asarray(w, dtype=np.float64)
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def unhat(W):
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def is_rotation(R, tol=1e-12):
    R = np.asarray(R)
    return (
        np.max(np.abs(R @ R.T - np.eye(3))) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def project_rotation(R):
    """Nearest rotation in Frobenius norm (polar factor via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0:
        out = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return out


def rotation_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    K = hat(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_rotation(rng):
    return project_rotation(rng.standard_normal((3, 3)))


def conj(g, h):
    """Conjugation g h g^{-1}."""
    return g @ h @ g.T


def adjoint(g, u):
    """Adjoint representation; under the hat map it is matrix action g u."""
    return g @ np.asarray(u, dtype=np.float64)


def coadjoint(g, mu):
    """Dual of the adjoint: <coadjoint(g, mu), u> = <mu, adjoint(g, u)>."""
    return g.T @ np.asarray(mu, dtype=np.float64)


def ad(u, v):
    """Algebra bracket; the cross product under the hat identification."""
    return np.cross(u, v)


def ad_star(u, mu):
    """Dual of ad: <ad_star(u, mu), v> = <mu, ad(u, v)>."""
    return np.cross(mu, u)


def momentum_map_r3(x, p):
    """Pairing-defined momentum of the lifted action; x cross p on SO(3)."""
    return np.cross(x, p)


class AlgebraPath:
    """Uniformly sampled curve t -> omega(t) in the algebra, t in [0, 1]."""

    def __init__(self, times, omegas):
        times = np.asarray(times, dtype=np.float64)
        omegas = np.asarray(omegas, dtype=np.float64)
        if times.ndim != 1 or omegas.shape != (times.size, 3):
            raise ValueError("need (N,) times and (N, 3) samples")
        if times.size < 2:
            raise ValueError("path needs at least two samples")
        if not (np.all(np.diff(times) > 0) and times[0] == 0.0 and times[-1] == 1.0):
            raise ValueError("timestamps must increase strictly from 0 to 1")
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-10, atol=1e-12):
            raise ValueError("time grid must be uniform")
        self.times = times
        self.omegas = omegas
        self._spline = CubicSpline(times, omegas, axis=0)

    @classmethod
    def from_function(cls, fn, n_samples):
        times = np.linspace(0.0, 1.0, n_samples + 1)
        return cls(times, np.array([fn(t) for t in times]))

    def __len__(self):
        return self.times.size

    def __call__(self, t):
        return self._spline(t)


def integrate_group_flow(path, steps):
    """Flow of d/dt g = hat(u_t) g from the identity; returns g at t=1.

    Classic 4th-order one-step method with a polar re-orthonormalization
    after every step, keeping iterates on the group.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    g = np.eye(3)
    dt = 1.0 / steps
    for k in range(steps):
        t = k * dt
        g = _rk4_step(path, g, t, dt)
        g = project_rotation(g)
    return g


def _rk4_step(path, g, t, dt):
    def rhs(tau, gm):
        return hat(path(tau)) @ gm

    k1 = rhs(t, g)
    k2 = rhs(t + 0.5 * dt, g + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, g + 0.5 * dt * k2)
    k4 = rhs(t + dt, g + dt * k3)
    return g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_group_flow_samples(path):
    """Flow integrated on the path's own grid; returns g at every sample."""
    times = path.times
    g = np.eye(3)
    out = [g]
    for k in range(times.size - 1):
        g = project_rotation(_rk4_step(path, g, times[k], times[k + 1] - times[k]))
        out.append(g)
    return out


def flow_variation(u_path, delta_path, refine=8):
    """Right-trivialized endpoint variation of the flow of u_path.

    Returns v with delta g_1 = hat(v) g_1, computed from the variation
    formula delta g_1 = g_1 * integral of Ad_{g_s^{-1}} delta u_s ds.  The
    quadrature runs on a refine-times-finer grid than the stored samples
    (Simpson), keeping the quadrature error below the flow error.
    """
    if not np.array_equal(u_path.times, delta_path.times):
        raise ValueError("paths must share the same time grid")
    n_fine = (len(u_path) - 1) * refine
    times = np.linspace(0.0, 1.0, n_fine + 1)
    dt = times[1] - times[0]
    g = np.eye(3)
    integrand = [adjoint(g.T, delta_path(0.0))]
    for k in range(n_fine):
        g = project_rotation(_rk4_step(u_path, g, times[k], dt))
        integrand.append(adjoint(g.T, delta_path(times[k + 1])))
    w = simpson(np.array(integrand), x=times, axis=0)
    return adjoint(g, w)


def euler_poincare_so3(u0, steps, inertia=None):
    """Geodesic (rigid-body) evolution d/dt u^flat = -ad*_u u^flat on [0, 1].

    inertia maps velocities to momenta (the flat map); identity by default.
    Returns (times, velocities, momenta).
    """
    u0 = np.asarray(u0, dtype=np.float64)
    B = np.eye(3) if inertia is None else np.asarray(inertia, dtype=np.float64)
    Binv = np.linalg.inv(B)
    mu = B @ u0
    dt = 1.0 / steps

    def rhs(m):
        return -ad_star(Binv @ m, m)

    times = [0.0]
    mus = [mu]
    for k in range(steps):
        k1 = rhs(mu)
        k2 = rhs(mu + 0.5 * dt * k1)
        k3 = rhs(mu + 0.5 * dt * k2)
        k4 = rhs(mu + dt * k3)
        mu = mu + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        times.append((k + 1) * dt)
        mus.append(mu)
    mus = np.array(mus)
    us = mus @ Binv.T
    return np.array(times), us, mus


def identity_residuals(n_draws=100, seed=0):
    """Max residuals of the group-action identities over random draws.

    Backs the check-geometry command; returns an ordered dict-like list of
    (name, residual) pairs.
    """
    rng = np.random.default_rng(seed)
    res = {
        "ad_composition": 0.0,
        "ad_inverse": 0.0,
        "coad_composition": 0.0,
        "pairing_adstar": 0.0,
        "equivariance_field": 0.0,
        "equivariance_momentum": 0.0,
        "ad_antisymmetry": 0.0,
        "momentum_pairing": 0.0,
    }
    for _ in range(n_draws):
        g = random_rotation(rng)
        h = random_rotation(rng)
        u = rng.standard_normal(3)
        v = rng.standard_normal(3)
        mu = rng.standard_normal(3)
        x = rng.standard_normal(3)
        p = rng.standard_normal(3)

        res["ad_composition"] = max(
            res["ad_composition"],
            np.max(np.abs(adjoint(g, adjoint(h, u)) - adjoint(g @ h, u))),
        )
        res["ad_inverse"] = max(
            res["ad_inverse"],
            np.max(np.abs(adjoint(g.T, adjoint(g, u)) - u)),
        )
        res["coad_composition"] = max(
            res["coad_composition"],
            np.max(np.abs(coadjoint(g, coadjoint(h, mu)) - coadjoint(h @ g, mu))),
        )
        res["pairing_adstar"] = max(
            res["pairing_adstar"],
            abs(np.dot(ad_star(u, mu), v) - np.dot(mu, ad(u, v))),
        )
        res["equivariance_field"] = max(
            res["equivariance_field"],
            np.max(np.abs(g @ np.cross(u, g.T @ x) - np.cross(adjoint(g, u), x))),
        )
        res["equivariance_momentum"] = max(
            res["equivariance_momentum"],
            np.max(
                np.abs(
                    momentum_map_r3(g @ x, g @ p)
                    - coadjoint(g.T, momentum_map_r3(x, p))
                )
            ),
        )
        res["ad_antisymmetry"] = max(
            res["ad_antisymmetry"], np.max(np.abs(ad(u, v) + ad(v, u)))
        )
        res["momentum_pairing"] = max(
            res["momentum_pairing"],
            max(
                abs(np.dot(momentum_map_r3(x, p), e) - np.dot(p, np.cross(e, x)))
                for e in np.eye(3)
            ),
        )
    return list(res.items())
