"""Exact-arithmetic tools for wind-tree billiards in ringed configurations."""

from .exactnum import Scalar, parse_scalar
from .config import Cell, Configuration, TreeSpec

__all__ = ["Scalar", "parse_scalar", "Cell", "Configuration", "TreeSpec"]
__version__ = "0.1.0"
