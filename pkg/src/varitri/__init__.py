"""Variational bicomplex and BV computations on jet algebras.

The public surface is split by topic: :mod:`varitri.jetalg` (differential
polynomials), :mod:`varitri.forms`, :mod:`varitri.varops`,
:mod:`varitri.tricomplex`, :mod:`varitri.ktbv` and :mod:`varitri.cli`.
"""

__version__ = "0.1.0"

from .errors import ContextError, GhostError, ParseError, ReductionError, VaritriError
from .grammar import format_poly, latex_poly, parse_expr
from .jetalg import DiffPoly, FieldDecl, JetContext

__all__ = [
    "__version__", "DiffPoly", "FieldDecl", "JetContext", "parse_expr", "format_poly",
    "latex_poly", "VaritriError", "ContextError", "GhostError", "ParseError", "ReductionError",
]
