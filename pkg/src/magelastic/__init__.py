"""Valued differential forms on tetrahedral meshes, with elastic, magnetic
and coupled magneto-elastic finite-element solvers."""
from . import algebra, valued, mesh
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
