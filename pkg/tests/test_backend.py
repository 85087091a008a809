"""Numba and numpy interpolation backends must agree exactly."""

import numpy as np
import pytest

from diffeo_match import backend
from diffeo_match.grid import Grid, interp_scalar, interp_vector
from diffeo_match.images import gaussian_blob


@pytest.fixture
def restore_backend():
    before = backend.current_backend()
    yield
    backend.use_backend(before)


def test_backend_selection(restore_backend):
    backend.use_backend("numpy")
    assert backend.current_backend() == "numpy"
    with pytest.raises(ValueError):
        backend.use_backend("fortran")
    if backend._numba_available():
        backend.use_backend("numba")
        assert backend.current_backend() == "numba"


@pytest.mark.skipif(not backend._numba_available(), reason="numba not installed")
def test_backends_agree_to_rounding(restore_backend):
    g = Grid((32, 32), 1.0 / 32)
    rng = np.random.default_rng(40)
    field = gaussian_blob(g, [0.45, 0.55], 0.15)
    vfield = np.stack([field, np.roll(field, 5, axis=0)])
    pts = rng.uniform(-1.0, 2.0, (2, 500))  # includes out-of-cell wraps
    backend.use_backend("numpy")
    s_np = interp_scalar(field, pts, g)
    v_np = interp_vector(vfield, pts, g)
    backend.use_backend("numba")
    s_nb = interp_scalar(field, pts, g)
    v_nb = interp_vector(vfield, pts, g)
    # the two paths order the arithmetic differently; agreement holds to
    # a couple of ulps
    assert np.max(np.abs(s_np - s_nb)) <= 4e-16
    assert np.max(np.abs(v_np - v_nb)) <= 4e-16


def test_interp_known_values(restore_backend):
    g = Grid((8, 8), 1.0 / 8)
    field = np.arange(64, dtype=np.float64).reshape(8, 8)
    for name in ("numpy", "numba"):
        if name == "numba" and not backend._numba_available():
            continue
        backend.use_backend(name)
        # node-aligned points return node values
        pts = np.array([[0.0, 2.0 / 8], [0.0, 3.0 / 8]])
        out = interp_scalar(field, pts, g)
        assert out[0] == field[0, 0]
        assert out[1] == field[2, 3]
        # halfway between two nodes along the last axis
        mid = np.array([[1.0 / 8], [0.5 / 8]])
        assert interp_scalar(field, mid, g)[0] == 0.5 * (field[1, 0] + field[1, 1])
        # periodic wrap: one full period away matches exactly
        wrapped = pts + 1.0
        assert np.array_equal(interp_scalar(field, wrapped, g), out)
