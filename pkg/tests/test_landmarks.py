"""Point-momentum geodesics, the quotient metric and landmark matching."""

import numpy as np
import pytest

from diffeo_match.kernels import KernelSpec, kernel_matrix
from diffeo_match.landmarks import (
    LandmarkState,
    hamiltonian,
    horizontal_lift,
    landmark_match,
    landmark_shoot,
    quotient_metric,
)

SPEC = KernelSpec("gaussian", 2, width=0.2)


def test_state_validation():
    with pytest.raises(ValueError):
        LandmarkState(np.zeros((2, 2)), np.zeros((3, 2)), SPEC)
    with pytest.raises(ValueError):
        LandmarkState(np.zeros((2, 3)), np.zeros((2, 3)), SPEC)
    with pytest.raises(ValueError):
        LandmarkState(np.full((2, 2), np.nan), np.zeros((2, 2)), SPEC)


def test_hamiltonian_cases():
    p = np.array([[0.3, -0.4]])
    q = np.array([[0.1, 0.2]])
    # one point: H = |p|^2 / 2 since k(0) = 1
    assert abs(hamiltonian(LandmarkState(q, p, SPEC)) - 0.5 * 0.25) <= 1e-15
    # two points far apart: contributions add, cross terms vanish
    q2 = np.array([[0.0, 0.0], [100.0, 0.0]])
    p2 = np.array([[1.0, 0.0], [0.0, 2.0]])
    h = hamiltonian(LandmarkState(q2, p2, SPEC))
    assert abs(h - 0.5 * (1.0 + 4.0)) <= 1e-12
    # two coincident points: all pairs at r = 0
    q3 = np.array([[0.3, 0.3], [0.3, 0.3]])
    p3 = np.array([[1.0, 0.0], [0.5, 0.5]])
    want = 0.5 * float(np.sum((p3[0] + p3[1]) ** 2))
    assert abs(hamiltonian(LandmarkState(q3, p3, SPEC)) - want) <= 1e-14


def test_single_landmark_travels_straight():
    # dq/dt = k(0) p = p and dp/dt = 0 for one point
    q0 = np.array([[0.2, 0.3]])
    p0 = np.array([[0.4, -0.1]])
    times, qs, ps = landmark_shoot(LandmarkState(q0, p0, SPEC), n_steps=64)
    want = q0[None] + times[:, None, None] * p0[None]
    assert np.max(np.abs(qs - want)) <= 1e-8
    assert np.max(np.abs(ps - p0[None])) <= 1e-12


def test_two_body_conservation():
    q0 = np.array([[-0.15, 0.0], [0.15, 0.0]])
    p0 = np.array([[0.3, 0.05], [-0.3, 0.05]])
    state = LandmarkState(q0, p0, SPEC)
    h0 = hamiltonian(state)
    times, qs, ps = landmark_shoot(state, n_steps=1000)
    # energy conservation at dt = 1e-3
    hs = [hamiltonian(LandmarkState(q, p, SPEC)) for q, p in zip(qs, ps)]
    assert np.max(np.abs(np.array(hs) - h0)) <= 1e-8 * abs(h0)
    # total momentum is conserved (the kernel forces are equal and opposite)
    totals = ps.sum(axis=1)
    assert np.max(np.abs(totals - totals[0])) <= 1e-8
    # mirror symmetry of the head-on configuration persists
    assert np.max(np.abs(qs[:, 0, 0] + qs[:, 1, 0])) <= 1e-10
    assert np.max(np.abs(qs[:, 0, 1] - qs[:, 1, 1])) <= 1e-10


def test_quotient_metric_cases():
    # single point: K(q) is the identity, so the metric is |U|^2
    q = np.array([[0.3, 0.4]])
    U = np.array([[0.5, -0.2]])
    assert abs(quotient_metric(SPEC, q, U) - float(np.sum(U**2))) <= 1e-14
    # far-apart points decouple
    q2 = np.array([[0.0, 0.0], [50.0, 0.0]])
    U2 = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert abs(quotient_metric(SPEC, q2, U2) - 5.0) <= 1e-10
    # coincident points make the kernel matrix singular
    with pytest.raises(ValueError):
        quotient_metric(SPEC, np.array([[0.1, 0.1], [0.1, 0.1]]),
                        np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_horizontal_lift_interpolates_and_realizes_metric():
    rng = np.random.default_rng(30)
    q = rng.uniform(0, 1, (5, 2))
    U = rng.standard_normal((5, 2))
    a, field = horizontal_lift(SPEC, q, U)
    # the lifted field matches the prescribed velocities at the landmarks
    assert np.max(np.abs(field(q) - U)) <= 1e-10
    # its squared kernel norm a^T K a equals the quotient metric
    Kq = kernel_matrix(SPEC, q)
    norm2 = float(a.ravel() @ Kq @ a.ravel())
    metric = quotient_metric(SPEC, q, U)
    assert abs(norm2 - metric) <= 1e-10 * abs(metric)


def test_horizontal_lift_orthogonal_to_vertical_fields():
    # fields vanishing at the landmarks are kernel-orthogonal to the lift:
    # <sum k(., q_i) a_i, v>_H = sum a_i . v(q_i) = 0
    rng = np.random.default_rng(31)
    q = rng.uniform(0, 1, (4, 2))
    U = rng.standard_normal((4, 2))
    a, _ = horizontal_lift(SPEC, q, U)
    nodes = np.vstack([q, rng.uniform(0, 1, (6, 2))])
    for _ in range(10):
        c = rng.standard_normal((10, 2))
        # project the coefficients so the combined field vanishes at q
        _, vfield = horizontal_lift(
            SPEC, nodes, np.vstack([np.zeros_like(q), c[4:]])
        )
        # kernel pairing with the lift reduces to point evaluations at q
        pairing = float(np.sum(a * vfield(q)))
        assert abs(pairing) <= 1e-10


def test_quotient_metric_is_minimum_over_lifts():
    # any interpolating field costs at least the metric; the horizontal
    # lift (zero vertical part) attains it
    rng = np.random.default_rng(32)
    q = rng.uniform(0, 1, (5, 2))
    U = rng.standard_normal((5, 2))
    metric = quotient_metric(SPEC, q, U)
    extra = rng.uniform(0, 1, (8, 2))
    nodes = np.vstack([q, extra])
    Kn = kernel_matrix(SPEC, nodes)
    _, hfield = horizontal_lift(SPEC, q, U)
    center = hfield(extra)  # the horizontal lift's values at the extra nodes
    best = np.inf
    for amp in (0.0, 1e-3, 0.03, 0.1, 0.3, 1.0):
        for _ in range(50):
            # every sample interpolates U at q exactly; the extra-node
            # values parameterize the vertical freedom of the lift
            vals = np.vstack([U, center + amp * rng.standard_normal((8, 2))])
            coeff = np.linalg.solve(Kn, vals.ravel())
            cost = float(vals.ravel() @ coeff)
            best = min(best, cost)
            assert cost >= metric - 1e-9 * abs(metric)
    assert abs(best - metric) <= 1e-9 * abs(metric)


def test_landmark_match_single_point_closed_form():
    # one landmark moves on a straight line: endpoint = q0 + p0, so the
    # objective |p|^2/2 + |p - d|^2/(2 sigma2) has minimizer d/(1 + sigma2)
    q0 = np.array([[0.3, 0.3]])
    d = np.array([[0.2, -0.1]])
    sigma2 = 1e-2
    p0, (times, qs, ps), result = landmark_match(
        SPEC, q0, q0 + d, sigma2, n_steps=32, max_iters=100
    )
    want = d / (1.0 + sigma2)
    assert np.max(np.abs(p0 - want)) <= 1e-6
    assert np.max(np.abs(qs[-1] - (q0 + p0))) <= 1e-8


def test_landmark_match_square_to_rotated_square():
    theta = np.pi / 8
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    base = np.array([[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8]]) - 0.5
    q0 = base + 0.5
    q1 = base @ R.T + 0.5
    p0, (times, qs, ps), result = landmark_match(
        SPEC, q0, q1, sigma2=1e-4, n_steps=32, max_iters=60
    )
    diameter = np.max(np.linalg.norm(q0[:, None] - q0[None], axis=-1))
    err = np.max(np.linalg.norm(qs[-1] - q1, axis=-1))
    assert err <= 0.01 * diameter
    # monotone objective along the accepted iterates
    values = [v for _, v, _ in result.trace]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_landmark_match_validates_layout():
    with pytest.raises(ValueError):
        landmark_match(SPEC, np.zeros((2, 2)), np.zeros((3, 2)), 1e-2)
