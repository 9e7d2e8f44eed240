"""Bayesian graphs of graphs: tessellations of variables with a supergraph between them."""

from .data import DataMatrix, standardize
from .errors import GoGError
from .params import GWishartHyper, HyperParams, TreeHyper
from .tessellation import Geometric, ShiftedNegBinomial, Tessellation

__all__ = [
    "DataMatrix", "GWishartHyper", "Geometric", "GoGError", "HyperParams",
    "ShiftedNegBinomial", "Tessellation", "TreeHyper", "standardize",
]
__version__ = "0.1.0"
