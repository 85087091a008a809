"""Diffeomorphic image and landmark registration.

Velocity fields on periodic grids are flowed into deformations, images are
matched either by descent over the whole velocity path (relaxation) or over
an initial momentum field (geodesic shooting), and a finite-dimensional
rotation-group testbed machine-checks the group-theoretic identities the
solvers rely on.
"""

__version__ = "0.1.0"


class DiffeoMatchError(Exception):
    """Base class for solver errors."""


class DiffeomorphismError(DiffeoMatchError):
    """A computed map stopped being orientation preserving (det <= 0)."""


class BlowUpError(DiffeoMatchError):
    """A shooting trajectory exceeded the velocity guard."""


class ConfigError(DiffeoMatchError):
    """Invalid run configuration or file format."""
