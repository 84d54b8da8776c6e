"""Numerical toolkit for conformal metrics with curvature measures on the disc of radius 1/2."""

from .errors import BoundaryCaseError, DivergenceError, DomainError, ResolutionError
from .measure import Atom, CellDensity, CircleLayer, CurvatureMeasure, decompose, discretize_layer
from .potential import HarmonicTerm, eval_harmonic, eval_potential

__version__ = "0.1.0"
