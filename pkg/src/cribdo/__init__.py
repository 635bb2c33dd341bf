"""Risk-based design optimization toolkit.

Monte Carlo risk estimators (PoF, quantile, superquantile, buffered PoF),
sample-average convex reformulations, derivative-free and convex solvers,
and two benchmark design problems (short column, cooling fin) wired into an
experiment harness with a CLI.
"""

from .risk import (
    RiskEstimate,
    SampleSet,
    estimate_bpof_alg2,
    estimate_bpof_minform,
    estimate_pof,
    estimate_quantile,
    estimate_superquantile,
    estimate_superquantile_minform,
)
from .harness import FormulationSpec, OptimizationRun, frontier, make_model, run
from .solvers import SolverConfig, SolveTrace

__version__ = "0.1.0"

__all__ = [
    "RiskEstimate",
    "SampleSet",
    "estimate_pof",
    "estimate_quantile",
    "estimate_superquantile",
    "estimate_superquantile_minform",
    "estimate_bpof_alg2",
    "estimate_bpof_minform",
    "FormulationSpec",
    "OptimizationRun",
    "run",
    "frontier",
    "make_model",
    "SolverConfig",
    "SolveTrace",
    "__version__",
]
