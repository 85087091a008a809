"""Pure-numpy periodic multilinear interpolation (fallback path)."""

import itertools

import numpy as np


def interp_periodic(field, pts):
    """Interpolate a scalar grid field at fractional index coordinates.

    field : (*shape) array on a periodic lattice.
    pts   : (d, m) index coordinates (arbitrary reals, wrapped mod shape).
    """
    d = pts.shape[0]
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    out = np.zeros(pts.shape[1], dtype=np.float64)
    for corner in itertools.product((0, 1), repeat=d):
        w = np.ones(pts.shape[1], dtype=np.float64)
        idx = []
        for ax, c in enumerate(corner):
            w = w * (frac[ax] if c else 1.0 - frac[ax])
            idx.append((base[ax] + c) % field.shape[ax])
        out += w * field[tuple(idx)]
    return out
