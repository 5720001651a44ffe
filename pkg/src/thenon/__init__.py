"""Numerical dynamics of transcendental Henon maps."""

__version__ = "0.1.0"

from .entire import (EntireFunction, exp_function, exp_of_function,
                     from_spec, identity_function, poly_function,
                     sin_function, zexp_function)
from .henon import HenonMap, OrbitRecord, Point2
from .numeric import ScaledComplex

__all__ = [
    "__version__",
    "EntireFunction", "exp_function", "exp_of_function", "from_spec",
    "identity_function", "poly_function", "sin_function", "zexp_function",
    "HenonMap", "OrbitRecord", "Point2",
    "ScaledComplex",
]
