"""Benchmark design problems."""

from .short_column import ShortColumnModel, ShortColumnConvexModel, short_column_limit_state, short_column_convex_forms
from .fin import FinGeometry, FemSystem, CoolingFinModel, build_fin_mesh, solve_fin, fin_objective

__all__ = [
    "ShortColumnModel",
    "ShortColumnConvexModel",
    "short_column_limit_state",
    "short_column_convex_forms",
    "FinGeometry",
    "FemSystem",
    "CoolingFinModel",
    "build_fin_mesh",
    "solve_fin",
    "fin_objective",
]
