"""Backend selection for the interpolation hot loops.

Two implementations of the periodic multilinear interpolators exist: numba
@njit kernels and a vectorized pure-numpy path.  The environment variable
``DIFFEO_MATCH_BACKEND`` picks one (``numba`` or ``numpy``); unset, numba is
used when importable.  ``DIFFEO_THREADS`` caps numba's thread pool
(0 = automatic).
"""

import os

_ENV_VAR = "DIFFEO_MATCH_BACKEND"
_THREADS_VAR = "DIFFEO_THREADS"

_active = None


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _apply_thread_cap():
    raw = os.environ.get(_THREADS_VAR, "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        return
    if n <= 0:
        return
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except Exception:
        pass


def use_backend(name):
    """Force the interpolation backend; name in {'numba', 'numpy'}."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    if name == "numba":
        _apply_thread_cap()
    _active = name


def current_backend():
    """Return the active backend name, resolving env/default on first use."""
    global _active
    if _active is None:
        requested = os.environ.get(_ENV_VAR, "").strip().lower()
        if requested:
            use_backend(requested)
        else:
            use_backend("numba" if _numba_available() else "numpy")
    return _active
