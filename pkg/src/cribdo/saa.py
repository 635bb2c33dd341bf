"""Sample-average-approximation problem builders.

A :class:`SaaProblem` couples a stochastic model with one frozen batch of
draws (common random numbers): every re-evaluation at a new design reuses
the same samples, so the resulting optimization problem is deterministic
and, for convex models, convex in (design, aux).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from .stochastics import RandomBatch

__all__ = [
    "StochasticModel",
    "SaaProblem",
    "LpTableau",
    "build_superquantile_constrained",
    "build_bpof_constrained",
    "build_bpof_objective",
    "expand_to_lp",
    "InfeasibleBudgetError",
]


class InfeasibleBudgetError(ValueError):
    """Raised when a budget constraint excludes every design in the box."""


@runtime_checkable
class StochasticModel(Protocol):
    """Evaluation interface mapping (design, draws) to objective/limit-state.

    ``design_bounds`` is an (n_d, 2) array of box bounds.  ``is_convex``
    declares convexity of both g and f in the design for every fixed draw.
    Models may additionally expose ``g_grads``/``f_grad`` for the convex
    solver path.
    """

    design_bounds: np.ndarray
    is_convex: bool

    def g_values(self, design: np.ndarray, draws: np.ndarray) -> np.ndarray:
        """Limit-state values, one per row of ``draws``."""

    def f_values(self, design: np.ndarray, draws: np.ndarray) -> np.ndarray:
        """Objective values, one per row of ``draws``."""


def _hinge_mean_sorted(u: np.ndarray) -> float:
    # sorted accumulation keeps the reduction order (and hence the value)
    # bit-stable across evaluations
    h = np.maximum(u, 0.0)
    h.sort()
    return float(np.sum(h)) / u.size


@dataclass
class SaaProblem:
    """Deterministic optimization problem over (design, aux) variables.

    Constraint callables follow the convention value <= 0 feasible.
    ``kind`` tags the construction so solvers can exploit structure; the
    raw model/batch/level fields stay available for structured access.
    """

    design_dim: int
    aux_dim: int
    objective: Callable[[np.ndarray, np.ndarray], float]
    constraints: List[Callable[[np.ndarray, np.ndarray], float]]
    bounds: np.ndarray  # (design_dim + aux_dim, 2), inf allowed
    convexity_flag: str  # "declared_convex" | "unknown"
    kind: str
    model: object = None
    batch: Optional[RandomBatch] = None
    alpha: Optional[float] = None
    t: Optional[float] = None
    budget: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.design_dim + self.aux_dim

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return x[: self.design_dim], x[self.design_dim:]


# relative epsilon realizing the open constraint lam < t
def _lam_upper(t: float) -> float:
    return t - 1e-9 * max(1.0, abs(t))


def _mean_objective(model: StochasticModel, batch: RandomBatch):
    draws = batch.draws

    def objective(d, aux):
        f = np.sort(model.f_values(d, draws))
        return float(np.sum(f)) / f.size

    return objective


def build_superquantile_constrained(model: StochasticModel, batch: RandomBatch,
                                    alpha_t: float, t: float) -> SaaProblem:
    """Expectation-form superquantile constraint over (d, gamma).

    Constraint: gamma + (1/(m(1-alpha_t))) sum [g(d, z_i) - gamma]+ <= t.
    """
    if not 0.0 < alpha_t < 1.0:
        raise ValueError("alpha_t must lie strictly inside (0, 1)")
    if batch.m < 1:
        raise ValueError("batch must not be empty")
    draws = batch.draws
    scale = 1.0 / (1.0 - alpha_t)

    def constraint(d, aux):
        gamma = float(aux[0])
        g = model.g_values(d, draws)
        return gamma + scale * _hinge_mean_sorted(g - gamma) - t

    bounds = np.vstack([np.asarray(model.design_bounds, float),
                        [[-np.inf, np.inf]]])
    flag = "declared_convex" if getattr(model, "is_convex", False) else "unknown"
    return SaaProblem(
        design_dim=model.design_bounds.shape[0], aux_dim=1,
        objective=_mean_objective(model, batch), constraints=[constraint],
        bounds=bounds, convexity_flag=flag, kind="sq_constrained",
        model=model, batch=batch, alpha=alpha_t, t=t,
    )


def build_bpof_constrained(model: StochasticModel, batch: RandomBatch,
                           alpha_t: float, t: float) -> SaaProblem:
    """Buffered-PoF constraint over (d, lam), rearranged to hinge form.

    lam + (1/(1-alpha_t)) mean [g(d, z_i) - lam]+ <= t with lam < t; the
    rearrangement makes the feasible set identical to the superquantile
    constraint, so the two builders share their optimum.
    """
    if not 0.0 < alpha_t < 1.0:
        raise ValueError("alpha_t must lie strictly inside (0, 1)")
    if batch.m < 1:
        raise ValueError("batch must not be empty")
    draws = batch.draws
    scale = 1.0 / (1.0 - alpha_t)

    def constraint(d, aux):
        lam = float(aux[0])
        g = model.g_values(d, draws)
        return lam + scale * _hinge_mean_sorted(g - lam) - t

    bounds = np.vstack([np.asarray(model.design_bounds, float),
                        [[-np.inf, _lam_upper(t)]]])
    flag = "declared_convex" if getattr(model, "is_convex", False) else "unknown"
    return SaaProblem(
        design_dim=model.design_bounds.shape[0], aux_dim=1,
        objective=_mean_objective(model, batch), constraints=[constraint],
        bounds=bounds, convexity_flag=flag, kind="bpof_constrained",
        model=model, batch=batch, alpha=alpha_t, t=t,
    )


def build_bpof_objective(model: StochasticModel, batch: RandomBatch,
                         t: float, c_t: float) -> SaaProblem:
    """Fractional buffered-PoF objective over (d, lam) with a budget constraint.

    Objective: mean [g(d, z_i) - lam]+ / (t - lam), clamped to [0, 1];
    constraint: mean f(d, z_i) <= c_t.  Raises InfeasibleBudgetError when no
    design in the box can meet the budget (checked at box corners for
    monotone objectives, plus the box center).
    """
    if batch.m < 1:
        raise ValueError("batch must not be empty")
    draws = batch.draws
    mean_f = _mean_objective(model, batch)

    def objective(d, aux):
        lam = float(aux[0])
        lam = min(lam, _lam_upper(t))
        g = model.g_values(d, draws)
        val = _hinge_mean_sorted(g - lam) / (t - lam)
        return float(np.clip(val, 0.0, 1.0))

    def budget_constraint(d, aux):
        return mean_f(d, aux) - c_t

    db = np.asarray(model.design_bounds, float)
    probes = [db[:, 0], db[:, 1], db.mean(axis=1)]
    if min(mean_f(p, np.zeros(1)) for p in probes) > c_t:
        raise InfeasibleBudgetError(
            f"budget {c_t} is below the achievable mean objective on the box")

    bounds = np.vstack([db, [[-np.inf, _lam_upper(t)]]])
    flag = "declared_convex" if getattr(model, "is_convex", False) else "unknown"
    return SaaProblem(
        design_dim=db.shape[0], aux_dim=1,
        objective=objective, constraints=[budget_constraint],
        bounds=bounds, convexity_flag=flag, kind="bpof_objective",
        model=model, batch=batch, t=t, budget=c_t,
    )


@dataclass
class LpTableau:
    """Dense inequality-form LP: min c.x s.t. A x <= b, lo <= x <= hi."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    c0: float = 0.0  # constant objective offset, added to reported optima

    def __post_init__(self):
        self.c = np.asarray(self.c, float)
        self.a_ub = np.atleast_2d(np.asarray(self.a_ub, float))
        self.b_ub = np.asarray(self.b_ub, float)
        self.lo = np.asarray(self.lo, float)
        self.hi = np.asarray(self.hi, float)
        n = self.c.size
        if self.a_ub.shape != (self.b_ub.size, n) or self.lo.size != n or self.hi.size != n:
            raise ValueError("inconsistent tableau dimensions")
        for arr in (self.c, self.a_ub, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("tableau entries must be finite")


def _affine_coefficients(fun, dim: int, probe_shift: np.ndarray, tol: float = 1e-7):
    """Recover coefficients of an affine map by probing; verify affinity."""
    base = probe_shift.astype(float)
    f0 = fun(base)
    coef = np.empty(dim)
    for j in range(dim):
        e = base.copy()
        e[j] += 1.0
        coef[j] = fun(e) - f0
    # affinity check at a deterministic off-axis point
    probe = base + np.linspace(0.3, 1.1, dim)
    expect = f0 + coef @ (probe - base)
    if abs(fun(probe) - expect) > tol * (1.0 + abs(expect)):
        raise ValueError("model is not affine in the design")
    intercept = f0 - coef @ base
    return coef, intercept


def expand_to_lp(p: SaaProblem, model_is_linear: bool = True) -> LpTableau:
    """Expand a hinge-form superquantile constraint into the LP over (d, gamma, b).

    Variables are ordered (d_1..d_n, gamma, b_1..b_m) with constraints
    gamma + (1/(m(1-alpha))) sum b_i <= t,  g(d, z_i) - gamma <= b_i,
    b_i >= 0.  Exact only for models affine in the design.
    """
    if p.kind not in ("sq_constrained", "bpof_constrained"):
        raise ValueError("only hinge-form constrained problems expand to an LP")
    if not model_is_linear:
        raise ValueError("non-affine model: supply an affine surrogate first")
    model, batch = p.model, p.batch
    n, m = p.design_dim, batch.m
    draws = batch.draws

    g_coef = np.empty((m, n))
    g_icpt = np.empty(m)
    base = np.zeros(n)
    for i in range(m):
        zi = draws[i: i + 1]
        g_coef[i], g_icpt[i] = _affine_coefficients(
            lambda d: float(model.g_values(d, zi)[0]), n, base)
    f_coef, f_icpt = _affine_coefficients(
        lambda d: float(np.mean(model.f_values(d, draws))), n, base)

    nv = n + 1 + m
    c = np.zeros(nv)
    c[:n] = f_coef

    a = np.zeros((1 + m, nv))
    b = np.zeros(1 + m)
    # gamma + sum b_i / (m (1 - alpha)) <= t
    a[0, n] = 1.0
    a[0, n + 1:] = 1.0 / (m * (1.0 - p.alpha))
    b[0] = p.t
    # g_i(d) - gamma - b_i <= 0
    a[1:, :n] = g_coef
    a[1:, n] = -1.0
    a[1:, n + 1:] = -np.eye(m)
    b[1:] = -g_icpt

    lo = np.concatenate([p.bounds[:n, 0], [-np.inf], np.zeros(m)])
    hi = np.concatenate([p.bounds[:n, 1], [p.t], np.full(m, np.inf)])
    return LpTableau(c=c, a_ub=a, b_ub=b, lo=lo, hi=hi, c0=f_icpt)
