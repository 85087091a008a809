"""Landmark specialization: point-mass momenta make the geodesics a finite ODE.

With momenta concentrated on N points the velocity is u = sum_j K(., q_j) p_j
and the evolution reduces to the canonical system of the kernel Hamiltonian
H = 1/2 sum_ij p_i . K(q_i, q_j) p_j.  The induced metric on configurations
is U^T K(q)^{-1} U, realized by the horizontal lift u = sum K(., q_j) a_j
with K(q) a = U.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import (
    KernelSpec,
    kernel_matrix,
    kernel_profile,
    kernel_profile_derivative,
)
from .descent import armijo_descent


@dataclass
class LandmarkState:
    q: np.ndarray  # (N, d) positions
    p: np.ndarray  # (N, d) momenta
    kernel: KernelSpec

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=np.float64))
        self.p = np.atleast_2d(np.asarray(self.p, dtype=np.float64))
        if self.q.shape != self.p.shape:
            raise ValueError("positions and momenta must have matching shape")
        if self.q.shape[1] != self.kernel.dim:
            raise ValueError("point dimension does not match kernel")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("non-finite landmark state")


def _pairwise(q):
    diff = q[:, None, :] - q[None, :, :]
    return diff, np.linalg.norm(diff, axis=-1)


def hamiltonian(state: LandmarkState):
    """Kinetic energy 1/2 sum_ij p_i . p_j k(|q_i - q_j|)."""
    _, r = _pairwise(state.q)
    prof = kernel_profile(state.kernel, r)
    return 0.5 * float(np.einsum("ik,jk,ij->", state.p, state.p, prof))


def _rhs(q, p, spec):
    diff, r = _pairwise(q)
    prof = kernel_profile(spec, r)
    dq = prof @ p
    # dk/dr / r stays finite at r = 0 for smooth radial profiles
    if spec.kind == "gaussian":
        slope = -prof / spec.width**2
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(
                r > 1e-12, kernel_profile_derivative(spec, r) / np.maximum(r, 1e-12),
                _profile_curvature_at_zero(spec),
            )
    pp = p @ p.T
    dp = -np.einsum("ij,ij,ijk->ik", pp, slope, diff)
    return dq, dp


def _profile_curvature_at_zero(spec):
    eps = 1e-4 * spec.alpha
    return float((kernel_profile(spec, np.array(eps)) - 1.0) / (0.5 * eps**2))


def landmark_shoot(state: LandmarkState, n_steps, t_final=1.0):
    """Canonical equations integrated with a classic 4th-order step.

    Returns (times, q_traj, p_traj) with trajectories shaped (n+1, N, d).
    """
    q = state.q.copy()
    p = state.p.copy()
    dt = t_final / n_steps
    qs, ps = [q.copy()], [p.copy()]
    for _ in range(n_steps):
        k1q, k1p = _rhs(q, p, state.kernel)
        k2q, k2p = _rhs(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p, state.kernel)
        k3q, k3p = _rhs(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p, state.kernel)
        k4q, k4p = _rhs(q + dt * k3q, p + dt * k3p, state.kernel)
        q = q + (dt / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        qs.append(q.copy())
        ps.append(p.copy())
    times = np.linspace(0.0, t_final, n_steps + 1)
    return times, np.array(qs), np.array(ps)


def _solve_kernel(spec, q, rhs_flat):
    Kq = kernel_matrix(spec, q)
    try:
        return np.linalg.solve(Kq, rhs_flat)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "kernel matrix singular (coincident landmarks?)"
        ) from exc


def quotient_metric(spec, q, U):
    """Induced metric value U^T K(q)^{-1} U on configuration tangents."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    a = _solve_kernel(spec, q, U.ravel())
    return float(U.ravel() @ a)


def horizontal_lift(spec, q, U):
    """Minimal-norm velocity field matching U at the landmarks.

    Returns coefficients a (N, d) of u(x) = sum_j k(|x - q_j|) a_j together
    with a callable evaluating the field at arbitrary points.
    """
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    a = _solve_kernel(spec, q, U.ravel()).reshape(q.shape)

    def field(x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        r = np.linalg.norm(x[:, None, :] - q[None, :, :], axis=-1)
        return kernel_profile(spec, r) @ a

    return a, field


def landmark_match(spec, q0, q_target, sigma2, n_steps=64, max_iters=200,
                   step0=1.0, armijo_c=1e-4, tol_grad=1e-10, fd_eps=1e-6):
    """Fit initial momenta so the shot endpoint approaches the targets.

    Minimizes 1/2 p^T K(q0) p + |q1(p) - q_target|^2 / (2 sigma2) by descent
    with central FD gradients in the momentum coordinates.
    """
    q0 = np.atleast_2d(np.asarray(q0, dtype=np.float64))
    q_target = np.atleast_2d(np.asarray(q_target, dtype=np.float64))
    if q0.shape != q_target.shape:
        raise ValueError("source and target must have the same layout")

    def endpoint(p):
        state = LandmarkState(q0, p.reshape(q0.shape), spec)
        _, qs, _ = landmark_shoot(state, n_steps)
        return qs[-1]

    def value_fn(p_flat):
        p = p_flat.reshape(q0.shape)
        kin = hamiltonian(LandmarkState(q0, p, spec))
        err = endpoint(p_flat) - q_target
        return kin + float(np.sum(err**2)) / (2.0 * sigma2)

    def direction_fn(p_flat):
        grad = np.zeros_like(p_flat)
        scale = fd_eps * max(1.0, float(np.max(np.abs(p_flat))))
        for i in range(p_flat.size):
            dp = np.zeros_like(p_flat)
            dp[i] = scale
            grad[i] = (value_fn(p_flat + dp) - value_fn(p_flat - dp)) / (2 * scale)
        return grad, float(np.sum(grad**2))

    result = armijo_descent(
        value_fn,
        direction_fn,
        np.zeros(q0.size),
        step0=step0,
        armijo_c=armijo_c,
        tol_grad=tol_grad,
        max_iters=max_iters,
    )
    p0 = result.x.reshape(q0.shape)
    times, qs, ps = landmark_shoot(LandmarkState(q0, p0, spec), n_steps)
    return p0, (times, qs, ps), result
