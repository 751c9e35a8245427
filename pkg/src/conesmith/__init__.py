"""Smoothed hyperbolic cones over all-right spherical complexes, and the fiber
checks for hyperbolized cubical complexes built on them."""
from .complexes import AllRightComplex, CubicalComplex, canonical_sphere, circle_complex, suspension
from .cones import ConeParams, Regions
from .smoothing import smooth_cone, smooth_cone_dim1
from .widths import WidthSet, check_dnp

__all__ = ["AllRightComplex", "CubicalComplex", "ConeParams", "Regions", "WidthSet", "canonical_sphere",
           "check_dnp", "circle_complex", "smooth_cone", "smooth_cone_dim1", "suspension"]
