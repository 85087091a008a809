"""Benchmark the interpolation hot loop: numba kernels vs pure numpy.

Interpolation dominates flow integration and image warping, so this compares
the two backends on the shapes those callers actually use.  Run with

    python benchmarks/bench_interp.py [--sizes 64,128,256] [--repeats 5]
"""

import argparse
import time

import numpy as np

from diffeo_match import backend
from diffeo_match.flows import VelocityPath, integrate_flow
from diffeo_match.grid import Grid, interp_scalar, interp_vector
from diffeo_match.images import gaussian_blob


def _time(fn, repeats):
    fn()  # warm up (numba compilation, cache effects)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_interp(n, repeats):
    g = Grid((n, n), 1.0 / n)
    rng = np.random.default_rng(0)
    field = gaussian_blob(g, [0.45, 0.55], 0.15)
    vfield = np.stack([field, np.roll(field, n // 8, axis=0)])
    pts = rng.uniform(0, 1, (2, n * n))
    rows = {}
    for name in ("numpy", "numba"):
        if name == "numba" and not backend._numba_available():
            continue
        backend.use_backend(name)
        rows[name] = (
            _time(lambda: interp_scalar(field, pts, g), repeats),
            _time(lambda: interp_vector(vfield, pts, g), repeats),
        )
    return rows


def bench_flow(n, repeats):
    g = Grid((n, n), 1.0 / n)
    u = VelocityPath.zeros(g, 16)
    x = g.coords()
    u.frames[:, 0] = 0.03 * np.sin(2 * np.pi * x[1])
    u.frames[:, 1] = 0.03 * np.sin(2 * np.pi * x[0])
    rows = {}
    for name in ("numpy", "numba"):
        if name == "numba" and not backend._numba_available():
            continue
        backend.use_backend(name)
        rows[name] = (_time(lambda: integrate_flow(u, 0.0, 1.0), repeats),)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,128,256")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'benchmark':<28}{'size':>6}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for n in sizes:
        rows = bench_interp(n, args.repeats)
        labels = ("interp_scalar", "interp_vector")
        for i, label in enumerate(labels):
            t_np = rows["numpy"][i]
            t_nb = rows.get("numba", (np.nan, np.nan))[i]
            ratio = t_np / t_nb if np.isfinite(t_nb) else float("nan")
            print(f"{label:<28}{n:>6}{t_np * 1e3:>10.2f}ms"
                  f"{t_nb * 1e3:>10.2f}ms{ratio:>8.1f}x")
        rows = bench_flow(n, args.repeats)
        t_np = rows["numpy"][0]
        t_nb = rows.get("numba", (np.nan,))[0]
        ratio = t_np / t_nb if np.isfinite(t_nb) else float("nan")
        print(f"{'integrate_flow (16 frames)':<28}{n:>6}{t_np * 1e3:>10.2f}ms"
              f"{t_nb * 1e3:>10.2f}ms{ratio:>8.1f}x")


if __name__ == "__main__":
    main()
