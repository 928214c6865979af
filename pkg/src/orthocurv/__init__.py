"""Riemann tensor components of diagonal metrics, computed three independent ways."""
from .expr import Expr, diff, to_str
from .metric import DiagonalMetric, load, load_file, validate
from .parse import parse
from .simplify import simplify

__version__ = "0.1.0"

__all__ = [
    "Expr", "DiagonalMetric", "parse", "diff", "simplify", "to_str",
    "load", "load_file", "validate", "__version__",
]
