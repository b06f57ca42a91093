"""Numerical Kaehler geometry on grids: canonical paths from holomorphic flows,
their velocity measures and ranges, and K-energy curvature along them."""

__version__ = "0.3.0"
