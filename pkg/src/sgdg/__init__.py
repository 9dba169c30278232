"""Adaptive sparse-grid discontinuous Galerkin solvers built on multiwavelets."""
from importlib.metadata import PackageNotFoundError, version

from .basis1d import (AlpertFamily, Basis1DIndex, InterpolatoryFamily, build_alpert_family,
                      build_interpolatory_family)
from .grid import ElementKey, IndexSet, enumerate_initial, sparse_dof
from .solution import DGSolution
from .fasttransform import FastMultiplier, TransferMatrix, direct_multiply, fast_multiply
from .adapt import AdaptConfig, check_structure, coarsen, refine

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - source checkout
    __version__ = "0.1.0"

__all__ = [
    "AlpertFamily", "Basis1DIndex", "InterpolatoryFamily", "build_alpert_family",
    "build_interpolatory_family", "ElementKey", "IndexSet", "enumerate_initial", "sparse_dof",
    "DGSolution", "FastMultiplier", "TransferMatrix", "direct_multiply", "fast_multiply",
    "AdaptConfig", "check_structure", "coarsen", "refine", "__version__",
]
