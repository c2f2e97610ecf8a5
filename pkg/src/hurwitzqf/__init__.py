"""Minus continued fractions, H-reduced binary quadratic forms, and counts of
small values of indefinite forms at primitive lattice points."""

from .numerics import INF, CertifiedReal, QuadraticSurd, compare
from .hurwitz import DigitSequence, evaluate, expand, periodic_value, validate
from .forms import BinaryForm, form_from_coefficients, form_from_endpoints, h_reduce, is_h_reduced

__version__ = "0.1.0"

__all__ = [
    "INF",
    "CertifiedReal",
    "QuadraticSurd",
    "compare",
    "DigitSequence",
    "evaluate",
    "expand",
    "periodic_value",
    "validate",
    "BinaryForm",
    "form_from_coefficients",
    "form_from_endpoints",
    "h_reduce",
    "is_h_reduced",
    "__version__",
]
