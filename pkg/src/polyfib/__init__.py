"""Analysis of real polynomial level sets for bifurcation behavior at infinity."""

from polyfib.poly import (
    GradientSplit,
    ParseError,
    Polynomial,
    gradient,
    hessian,
    homogeneous_components,
    parse_polynomial,
    radial_spherical_split,
)

__all__ = [
    "GradientSplit",
    "ParseError",
    "Polynomial",
    "gradient",
    "hessian",
    "homogeneous_components",
    "parse_polynomial",
    "radial_spherical_split",
]

__version__ = "0.1.0"
