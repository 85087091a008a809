"""Numba kernels for periodic multilinear interpolation (hot path)."""

import numba
import numpy as np


@numba.njit(cache=True)
def interp1(f, x, out):
    n0 = f.shape[0]
    for k in range(x.shape[0]):
        i0 = int(np.floor(x[k]))
        fx = x[k] - i0
        i0 = i0 % n0
        i1 = (i0 + 1) % n0
        out[k] = f[i0] * (1.0 - fx) + f[i1] * fx


@numba.njit(cache=True)
def interp2(f, x, y, out):
    n0, n1 = f.shape
    for k in range(x.shape[0]):
        i0 = int(np.floor(x[k]))
        j0 = int(np.floor(y[k]))
        fx = x[k] - i0
        fy = y[k] - j0
        i0 = i0 % n0
        j0 = j0 % n1
        i1 = (i0 + 1) % n0
        j1 = (j0 + 1) % n1
        out[k] = (
            f[i0, j0] * (1.0 - fx) * (1.0 - fy)
            + f[i1, j0] * fx * (1.0 - fy)
            + f[i0, j1] * (1.0 - fx) * fy
            + f[i1, j1] * fx * fy
        )


@numba.njit(cache=True)
def interp3(f, x, y, z, out):
    n0, n1, n2 = f.shape
    for k in range(x.shape[0]):
        i0 = int(np.floor(x[k]))
        j0 = int(np.floor(y[k]))
        l0 = int(np.floor(z[k]))
        fx = x[k] - i0
        fy = y[k] - j0
        fz = z[k] - l0
        i0 = i0 % n0
        j0 = j0 % n1
        l0 = l0 % n2
        i1 = (i0 + 1) % n0
        j1 = (j0 + 1) % n1
        l1 = (l0 + 1) % n2
        c00 = f[i0, j0, l0] * (1.0 - fx) + f[i1, j0, l0] * fx
        c10 = f[i0, j1, l0] * (1.0 - fx) + f[i1, j1, l0] * fx
        c01 = f[i0, j0, l1] * (1.0 - fx) + f[i1, j0, l1] * fx
        c11 = f[i0, j1, l1] * (1.0 - fx) + f[i1, j1, l1] * fx
        c0 = c00 * (1.0 - fy) + c10 * fy
        c1 = c01 * (1.0 - fy) + c11 * fy
        out[k] = c0 * (1.0 - fz) + c1 * fz


def interp_periodic(field, pts):
    """Numba-backed twin of _interp_numpy.interp_periodic."""
    d = pts.shape[0]
    out = np.empty(pts.shape[1], dtype=np.float64)
    f = np.ascontiguousarray(field, dtype=np.float64)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if d == 1:
        interp1(f, pts[0], out)
    elif d == 2:
        interp2(f, pts[0], pts[1], out)
    elif d == 3:
        interp3(f, pts[0], pts[1], pts[2], out)
    else:
        raise ValueError(f"unsupported dimension {d}")
    return out
