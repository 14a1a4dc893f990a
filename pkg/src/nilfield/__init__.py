"""Exact and numerical tools for polynomial fields ``lambda*I + H`` with nilpotent ``JH``."""

__version__ = "0.1.0"

from .polycore import MultiPoly, PolyMap, PolyMatrix, jacobian  # noqa: E402
from .classify import classify_field  # noqa: E402
from .fieldspec import FieldSpec, SpecError, parse_field_spec  # noqa: E402

__all__ = [
    "MultiPoly",
    "PolyMap",
    "PolyMatrix",
    "jacobian",
    "classify_field",
    "FieldSpec",
    "SpecError",
    "parse_field_spec",
    "__version__",
]
