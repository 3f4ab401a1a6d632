"""Octonion-bundle description of G2-structures on a periodic lattice."""

from .forms import FourForm, StructureConstants, ThreeForm, TorsionComponents, phi0
from .lattice import Grid

__all__ = ["FourForm", "Grid", "StructureConstants", "ThreeForm", "TorsionComponents", "phi0"]
__version__ = "0.1.0"
