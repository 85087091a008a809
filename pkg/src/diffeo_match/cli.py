"""Command line surface: diffeo-match <subcommand>.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(blow-up or loss of invertibility).  All outputs are written atomically.
"""

import argparse
import os
import sys

import numpy as np

from . import BlowUpError, ConfigError, DiffeomorphismError
from . import geometry
from .grid import Grid
from .images import deform_image, smooth_image
from .io_formats import (
    parse_config,
    read_pgm,
    read_points_csv,
    read_raw_grid,
    write_csv,
    write_pgm,
    write_raw_grid,
)
from .landmarks import landmark_match
from .relax import optimize
from .shoot import conservation_residual, optimize_P0, shoot_epdiff


def _build_parser():
    p = argparse.ArgumentParser(
        prog="diffeo-match",
        description="Diffeomorphic image and landmark registration",
    )
    sub = p.add_subparsers(dest="command")

    g = sub.add_parser("check-geometry",
                       help="print rotation-group identity residuals as CSV")
    g.add_argument("--draws", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)

    for name in ("register-relax", "register-shoot"):
        r = sub.add_parser(name, help=f"{name.split('-')[1]} image matching")
        r.add_argument("--fixed", required=True, help="target image (PGM)")
        r.add_argument("--moving", required=True, help="template image (PGM)")
        r.add_argument("--config", required=True)
        r.add_argument("--out", required=True, help="output directory")
        if name == "register-shoot":
            r.add_argument("--p0-basis", type=int, default=None)
            r.add_argument("--filter", type=float, default=None,
                           help="fraction of top frequencies removed per step")
            r.add_argument("--snapshot-every", type=int, default=8)

    lm = sub.add_parser("landmarks", help="landmark matching")
    lm.add_argument("--points", required=True, help="source points CSV")
    lm.add_argument("--targets", required=True, help="target points CSV")
    lm.add_argument("--config", required=True)
    lm.add_argument("--out", required=True)

    ep = sub.add_parser("simulate-epdiff",
                        help="integrate the momentum-form geodesic equation")
    ep.add_argument("--m0", required=True, help="initial momentum (raw grid)")
    ep.add_argument("--config", required=True)
    ep.add_argument("--out", required=True)
    ep.add_argument("--snapshot-every", type=int, default=8)

    w = sub.add_parser("warp-grid",
                       help="render a deformed lattice for visual inspection")
    w.add_argument("--map", required=True, help="deformation (raw grid)")
    w.add_argument("--out", required=True, help="output PGM path")
    w.add_argument("--lines", type=int, default=16)
    return p


def _load_image_pair(args, cfg):
    fixed = read_pgm(args.fixed)
    moving = read_pgm(args.moving)
    if fixed.shape != moving.shape:
        raise ConfigError("fixed and moving images differ in size")
    g = Grid(fixed.shape, 1.0 / fixed.shape[0])
    w = cfg["pre_smooth"]
    return smooth_image(moving, g, w), smooth_image(fixed, g, w), g


def _cmd_check_geometry(args):
    print("identity,residual")
    for name, residual in geometry.identity_residuals(args.draws, args.seed):
        print(f"{name},{residual:.17g}")
    return 0


def _cmd_register_relax(args):
    cfg = parse_config(args.config)
    img0, img1, g = _load_image_pair(args, cfg)
    state = optimize(img0, img1, cfg.match_config(), cfg.kernel_spec(), grid=g)
    os.makedirs(args.out, exist_ok=True)
    write_csv(
        os.path.join(args.out, "energy.csv"),
        ["iter", "kinetic", "mismatch", "total", "step"],
        state.energy_trace,
    )
    write_raw_grid(os.path.join(args.out, "phi1.rgrid"), state.phi1, g.spacing)
    write_raw_grid(os.path.join(args.out, "phi1_inv.rgrid"), state.phi1_inv,
                   g.spacing)
    warped = deform_image(img0, state.phi1_inv, g)
    write_pgm(os.path.join(args.out, "warped.pgm"), warped)
    return 0


def _cmd_register_shoot(args):
    cfg = parse_config(args.config)
    img0, img1, g = _load_image_pair(args, cfg)
    scfg = cfg.shoot_config()
    if args.p0_basis is not None:
        scfg.p0_basis = args.p0_basis
    if args.filter is not None:
        scfg.filter_frac = args.filter
    mom0, traj, diag = optimize_P0(img0, img1, scfg, cfg.kernel_spec(), g)
    os.makedirs(args.out, exist_ok=True)
    write_raw_grid(os.path.join(args.out, "p0.rgrid"), mom0, g.spacing)
    every = max(args.snapshot_every, 1)
    for s in traj.states:
        step = int(round(s.t * scfg.n_steps))
        if step % every == 0 or step == scfg.n_steps:
            write_raw_grid(
                os.path.join(args.out, f"image_{step:04d}.rgrid"), s.img,
                g.spacing,
            )
    residuals = conservation_residual(traj.states, g)
    write_csv(
        os.path.join(args.out, "conservation.csv"),
        ["t", "residual"],
        [(s.t, float(r)) for s, r in zip(traj.states, residuals)],
    )
    write_pgm(os.path.join(args.out, "warped.pgm"), traj.final.img)
    write_csv(
        os.path.join(args.out, "energy.csv"),
        ["iter", "total", "grad_sq"],
        diag["trace"],
    )
    return 0


def _cmd_landmarks(args):
    cfg = parse_config(args.config)
    ids, src = read_points_csv(args.points)
    ids_t, dst = read_points_csv(args.targets)
    if src.shape != dst.shape:
        raise ConfigError("point lists differ in size or dimension")
    spec = cfg.kernel_spec()
    if spec.dim != src.shape[1]:
        raise ConfigError(
            f"config dim {spec.dim} does not match {src.shape[1]}-d points"
        )
    p0, (times, qs, _), result = landmark_match(
        spec, src, dst, cfg["sigma2"], n_steps=cfg["n_steps"],
        max_iters=cfg["max_iters"], step0=cfg["step0"],
        armijo_c=cfg["armijo_c"],
    )
    os.makedirs(args.out, exist_ok=True)
    coord_names = ["x", "y", "z"][: src.shape[1]]
    rows = []
    for k, t in enumerate(times):
        for i, pid in enumerate(ids):
            rows.append((pid, float(t), *[float(c) for c in qs[k, i]]))
    write_csv(os.path.join(args.out, "trajectory.csv"),
              ["id", "t", *coord_names], rows)
    write_csv(
        os.path.join(args.out, "p0.csv"),
        ["id", *[f"p{c}" for c in coord_names]],
        [(pid, *[float(c) for c in p0[i]]) for i, pid in enumerate(ids)],
    )
    return 0


def _cmd_simulate_epdiff(args):
    cfg = parse_config(args.config)
    m0, spacing = read_raw_grid(args.m0)
    if m0.ndim < 2:
        raise ConfigError("initial momentum must be a vector grid")
    g = Grid(m0.shape[1:], spacing)
    scfg = cfg.shoot_config()
    states = shoot_epdiff(m0, cfg.kernel_spec(), g, n_steps=scfg.n_steps,
                          filter_frac=scfg.filter_frac,
                          store_every=max(args.snapshot_every, 1))
    os.makedirs(args.out, exist_ok=True)
    for s in states:
        step = int(round(s.t * scfg.n_steps))
        write_raw_grid(os.path.join(args.out, f"momentum_{step:04d}.rgrid"),
                       s.mom, g.spacing)
    residuals = conservation_residual(states, g)
    write_csv(
        os.path.join(args.out, "conservation.csv"),
        ["t", "residual"],
        [(s.t, float(r)) for s, r in zip(states, residuals)],
    )
    return 0


def _cmd_warp_grid(args):
    phi, spacing = read_raw_grid(args.map)
    if phi.ndim != 3 or phi.shape[0] != 2:
        raise ConfigError("warp-grid expects a 2-d deformation raw grid")
    g = Grid(phi.shape[1:], spacing)
    lattice = _lattice_image(g, args.lines)
    img = deform_image(lattice, phi, g)
    write_pgm(args.out, img)
    return 0


def _lattice_image(g, lines):
    x = g.coords()
    img = np.ones(g.shape)
    for ax in range(g.dim):
        phase = 2.0 * np.pi * lines * x[ax] / g.extent[ax]
        img *= 0.5 * (1.0 + np.cos(phase)) ** 0.25
    return img


_COMMANDS = {
    "check-geometry": _cmd_check_geometry,
    "register-relax": _cmd_register_relax,
    "register-shoot": _cmd_register_shoot,
    "landmarks": _cmd_landmarks,
    "simulate-epdiff": _cmd_simulate_epdiff,
    "warp-grid": _cmd_warp_grid,
}


def cli_dispatch(argv):
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BlowUpError, DiffeomorphismError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
