"""Harmonic analysis on directed graphs via twin hierarchical trees.

The pipeline: a weighted digraph is symmetrized two ways, each symmetric
companion is clustered into a hierarchy, the two hierarchies become
weighted filtrations of [0, 1), and the product of their leaf intervals
hosts an orthogonal system of piecewise-constant functions on which
graph signals can be expanded, filtered, differentiated, and scored for
smoothness.
"""

__version__ = "0.1.0"

from . import analysis, basis, clustering, digraph, filtration, metrics

__all__ = [
    "analysis",
    "basis",
    "clustering",
    "digraph",
    "filtration",
    "metrics",
    "__version__",
]
