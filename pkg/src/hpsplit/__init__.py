"""hpsplit: piecewise property prediction by hyperplane data splitting.

Builds prediction functions over chemical-graph feature vectors by finding
an LP-derived hyperplane that splits a data set in two, fitting independent
regressors on each side, and combining them into one piecewise predictor.
Also ships the descriptor extractor for the two-layered chemical-graph model
and a parser/validator for topological target specifications.
"""
from hpsplit._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
