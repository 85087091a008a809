"""End-to-end acceptance gate: ten numbered criteria, one verdict line each."""

import time

import numpy as np

from diffeo_match import geometry as geo
from diffeo_match.cli import cli_dispatch
from diffeo_match.flows import VelocityPath, jacobian_det
from diffeo_match.grid import Grid, l2_norm
from diffeo_match.images import (
    bandlimited_field,
    deform_image,
    diamond,
    gaussian_blob,
    l2_mismatch,
)
from diffeo_match.kernels import (
    KernelSpec,
    admissibility_report,
    kernel_matrix,
)
from diffeo_match.landmarks import (
    LandmarkState,
    hamiltonian,
    horizontal_lift,
    landmark_shoot,
    quotient_metric,
)
from diffeo_match.relax import MatchConfig, directional_derivative, energy, optimize
from diffeo_match.shoot import (
    ShootConfig,
    conservation_residual,
    optimize_P0,
    shoot,
    shoot_epdiff,
)


def _verdict(number, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {number:02d}: {status} ({detail})", flush=True)
    assert ok, f"criterion {number}: {detail}"


def _smooth_algebra_path(seed):
    r = np.random.default_rng(seed)
    a, b, c = r.standard_normal((3, 3))
    return lambda t: a + b * np.sin(2 * np.pi * t) + c * t * t


def test_criterion_01_geometry_identities():
    t0 = time.perf_counter()
    residuals = geo.identity_residuals(100, seed=11)
    worst = max(r for _, r in residuals)
    fd_worst = 0.0
    for seed in (0, 1):
        u = geo.AlgebraPath.from_function(_smooth_algebra_path(seed), 64)
        du = geo.AlgebraPath.from_function(_smooth_algebra_path(seed + 9), 64)
        v = geo.flow_variation(u, du)
        eps = 1e-5

        def endpoint(e):
            return geo.integrate_group_flow(
                geo.AlgebraPath(u.times, u.omegas + e * du.omegas), 512
            )

        g1 = geo.integrate_group_flow(u, 512)
        dg = (endpoint(eps) - endpoint(-eps)) / (2 * eps)
        v_fd = geo.unhat(dg @ g1.T)
        fd_worst = max(fd_worst, np.linalg.norm(v - v_fd) / np.linalg.norm(v_fd))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and fd_worst <= 1e-5 and elapsed < 5.0
    _verdict(1, ok, f"identities {worst:.2e}, variation FD {fd_worst:.2e}, "
                    f"{elapsed:.1f}s")


def test_criterion_02_gradient_matches_finite_differences():
    t0 = time.perf_counter()
    g = Grid((32, 32), 1.0 / 32)
    spec = KernelSpec("gaussian", 2, width=0.125)
    cfg = MatchConfig(sigma2=1e-2, n_time=8)
    img0 = gaussian_blob(g, [0.45, 0.5], 0.15)
    img1 = gaussian_blob(g, [0.55, 0.5], 0.15)
    u = VelocityPath.zeros(g, 8)
    rng = np.random.default_rng(12)
    eps = 3e-6
    worst = 0.0
    for _ in range(10):
        frames = []
        for _ in range(9):
            v = bandlimited_field(g, rng, max_mode=2)
            frames.append(0.05 * v / np.max(np.abs(v)))
        delta = VelocityPath(np.stack(frames), g)
        want = directional_derivative(u, delta, img0, img1, spec, cfg)
        ep = energy(VelocityPath(u.frames + eps * delta.frames, g),
                    img0, img1, spec, cfg).total
        em = energy(VelocityPath(u.frames - eps * delta.frames, g),
                    img0, img1, spec, cfg).total
        fd = (ep - em) / (2 * eps)
        worst = max(worst, abs(want - fd) / abs(fd))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 60.0
    _verdict(2, ok, f"worst relative error {worst:.2e} over 10 directions, "
                    f"{elapsed:.1f}s")


def _shoot_fixture(n):
    g = Grid((n, n), 1.0 / n)
    img0 = gaussian_blob(g, [0.5, 0.5], 0.12)
    mom0 = 0.55 * gaussian_blob(g, [0.4, 0.5], 0.1)
    return g, img0, mom0


def test_criterion_03_conservation():
    t0 = time.perf_counter()
    # one landmark flies straight with constant momentum
    spec = KernelSpec("gaussian", 2, width=0.2)
    q0 = np.array([[0.2, 0.3]])
    p0 = np.array([[0.4, -0.1]])
    times, qs, ps = landmark_shoot(LandmarkState(q0, p0, spec), n_steps=64)
    line_err = max(
        np.max(np.abs(qs - (q0[None] + times[:, None, None] * p0[None]))),
        np.max(np.abs(ps - p0[None])),
    )
    # grid: transported momentum along a shot geodesic
    gspec = KernelSpec("gaussian", 2, width=0.125)
    g64, img64, mom64 = _shoot_fixture(64)
    traj = shoot(img64, mom64, gspec, g64, n_steps=64, store_every=8)
    res_coarse = float(np.max(conservation_residual(traj.states, g64)))
    # refining the discretization must at least halve the residual
    g128, img128, mom128 = _shoot_fixture(128)
    traj_f = shoot(img128, mom128, gspec, g128, n_steps=128, store_every=16)
    res_fine = float(np.max(conservation_residual(traj_f.states, g128)))
    elapsed = time.perf_counter() - t0
    ok = (
        line_err <= 1e-8
        and res_coarse <= 2e-2
        and res_fine <= 0.5 * res_coarse
        and elapsed < 120.0
    )
    _verdict(3, ok, f"landmark line {line_err:.2e}, residual {res_coarse:.2e} "
                    f"-> {res_fine:.2e} refined, {elapsed:.1f}s")


def test_criterion_04_norm_constancy():
    gspec = KernelSpec("gaussian", 2, width=0.125)
    g64, img64, mom64 = _shoot_fixture(64)
    traj = shoot(img64, mom64, gspec, g64, n_steps=64, store_every=8)
    energies = traj.velocity_energies()
    grid_drift = float(np.max(np.abs(energies - energies[0])) / energies[0])
    spec = KernelSpec("gaussian", 2, width=0.2)
    q0 = np.array([[-0.15, 0.0], [0.15, 0.0]])
    p0 = np.array([[0.3, 0.05], [-0.3, 0.05]])
    state = LandmarkState(q0, p0, spec)
    h0 = hamiltonian(state)
    _, qs, ps = landmark_shoot(state, n_steps=1000)  # dt = 1e-3
    hs = np.array([hamiltonian(LandmarkState(q, p, spec))
                   for q, p in zip(qs, ps)])
    h_drift = float(np.max(np.abs(hs - h0)) / abs(h0))
    ok = grid_drift <= 1e-2 and h_drift <= 1e-8
    _verdict(4, ok, f"grid energy drift {grid_drift:.2e}, "
                    f"landmark H drift {h_drift:.2e}")


def test_criterion_05_formulation_equivalence():
    n = 128
    g = Grid((n, n), 1.0 / n)
    spec = KernelSpec("gaussian", 2, width=0.15)
    img0 = gaussian_blob(g, [0.5, 0.5], 0.18)
    mom0 = 0.45 * gaussian_blob(g, [0.42, 0.5], 0.15)
    m0 = diamond(img0, mom0, g)
    traj = shoot(img0, mom0, spec, g, n_steps=64, store_every=64)
    states = shoot_epdiff(m0, spec, g, n_steps=64, store_every=64)
    rel = float(
        l2_norm(traj.final.vel - states[-1].vel, g) / l2_norm(states[-1].vel, g)
    )
    ok = rel <= 1e-3
    _verdict(5, ok, f"endpoint velocity relative L2 difference {rel:.2e}")


def _relax_fixture():
    n = 64
    g = Grid((n, n), 1.0 / n)
    h = 1.0 / n
    img0 = gaussian_blob(g, [0.5 - 1.5 * h, 0.5], 0.15)
    img1 = gaussian_blob(g, [0.5 + 1.5 * h, 0.5], 0.15)
    spec = KernelSpec("gaussian", 2, width=8.0 * h)
    return g, img0, img1, spec


def test_criterion_06_relaxation_fixture():
    t0 = time.perf_counter()
    g, img0, img1, spec = _relax_fixture()
    cfg = MatchConfig(sigma2=1e-2, n_time=8, max_iters=200, tol_grad=1e-10)
    state = optimize(img0, img1, cfg, spec, grid=g)
    warped = deform_image(img0, state.phi1_inv, g)
    reduction = 1.0 - l2_mismatch(warped, img1, g) / l2_mismatch(img0, img1, g)
    totals = [row[3] for row in state.energy_trace]
    monotone = all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
    min_det = float(np.min(jacobian_det(state.phi1, g)))
    elapsed = time.perf_counter() - t0
    ok = (
        reduction >= 0.90
        and len(state.energy_trace) <= 200
        and min_det > 0.0
        and monotone
        and elapsed < 300.0
    )
    _verdict(6, ok, f"mismatch reduced {100 * reduction:.1f}%, "
                    f"min det {min_det:.3f}, monotone={monotone}, "
                    f"{elapsed:.0f}s")


def test_criterion_07_shooting_fixture():
    t0 = time.perf_counter()
    g, img0, img1, spec = _relax_fixture()
    cfg = ShootConfig(sigma2=1e-2, n_steps=64, p0_basis=8, max_iters=20)
    mom0, traj, diag = optimize_P0(img0, img1, cfg, spec, g, opt_steps=16)
    reduction = 1.0 - l2_mismatch(traj.final.img, img1, g) / l2_mismatch(
        img0, img1, g
    )
    # the recovered vector momentum P0 grad(I0) is colinear with grad(I0)
    from diffeo_match.grid import gradient

    m0 = diamond(img0, mom0, g)
    gi = gradient(img0, g)
    wedge = float(np.max(np.abs(m0[0] * gi[1] - m0[1] * gi[0])))
    res = float(np.max(conservation_residual(traj.states, g)))
    elapsed = time.perf_counter() - t0
    ok = reduction >= 0.85 and wedge <= 1e-12 and res <= 2e-2
    _verdict(7, ok, f"mismatch reduced {100 * reduction:.1f}%, "
                    f"colinearity wedge {wedge:.1e}, conservation {res:.2e}, "
                    f"{elapsed:.0f}s")


def test_criterion_08_quotient_metric():
    rng = np.random.default_rng(13)
    spec = KernelSpec("gaussian", 2, width=0.2)
    q = rng.uniform(0, 1, (5, 2))
    U = rng.standard_normal((5, 2))
    metric = quotient_metric(spec, q, U)
    # horizontal lift attains the metric exactly
    a, _ = horizontal_lift(spec, q, U)
    lift_val = float(a.ravel() @ kernel_matrix(spec, q) @ a.ravel())
    lift_err = abs(lift_val - metric) / abs(metric)
    # brute force over 1e4 random lifts through 8 extra nodes
    extra = rng.uniform(0, 1, (8, 2))
    nodes = np.vstack([q, extra])
    Kn = kernel_matrix(spec, nodes)
    _, hfield = horizontal_lift(spec, q, U)
    center = hfield(extra)
    best = np.inf
    amps = np.concatenate([np.zeros(10), 10.0 ** rng.uniform(-4, 0, 9990)])
    for amp in amps:
        vals = np.vstack([U, center + amp * rng.standard_normal((8, 2))])
        coeff = np.linalg.solve(Kn, vals.ravel())
        best = min(best, float(vals.ravel() @ coeff))
    ok = (
        lift_err <= 1e-10
        and best >= metric - 1e-9 * abs(metric)
        and best <= metric * (1.0 + 1e-6)
    )
    _verdict(8, ok, f"horizontal lift error {lift_err:.1e}, brute-force "
                    f"minimum within {abs(best - metric) / metric:.1e}")


def test_criterion_09_admissibility_and_psd():
    low = admissibility_report(KernelSpec("sobolev", 3, alpha=0.05, order=1))
    high = admissibility_report(KernelSpec("sobolev", 3, alpha=0.05, order=3))
    rng = np.random.default_rng(14)
    specs = (
        KernelSpec("gaussian", 2, width=0.1),
        KernelSpec("sobolev", 2, alpha=0.05, order=3),
    )
    psd_ok = True
    for _ in range(50):
        spec = specs[rng.integers(len(specs))]
        n_pts = int(rng.integers(2, 12))
        K = kernel_matrix(spec, rng.uniform(0, 1, (n_pts, 2)))
        floor = -1e-10 * np.trace(K) / n_pts
        if np.linalg.eigvalsh(K).min() < floor:
            psd_ok = False
    ok = (not low.passed) and high.passed and psd_ok
    _verdict(9, ok, f"order-1 rejected={not low.passed}, "
                    f"order-3 accepted={high.passed}, PSD on 50 configs={psd_ok}")


def test_criterion_10_determinism(tmp_path):
    from diffeo_match.io_formats import write_pgm

    n = 32
    g = Grid((n, n), 1.0 / n)
    mv = tmp_path / "moving.pgm"
    fx = tmp_path / "fixed.pgm"
    write_pgm(mv, gaussian_blob(g, [0.5 - 2.0 / n, 0.5], 0.15), maxval=65535)
    write_pgm(fx, gaussian_blob(g, [0.5 + 2.0 / n, 0.5], 0.15), maxval=65535)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "solver = relax\nkernel_width = 0.15\nmax_iters = 15\nn_time = 4\n"
    )
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = cli_dispatch([
            "register-relax", "--fixed", str(fx), "--moving", str(mv),
            "--config", str(cfg), "--out", str(out),
        ])
        assert code == 0
        outputs.append((out / "energy.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    _verdict(10, ok, f"energy.csv bit-identical across runs={ok}")
