"""Solver backends.

Three paths:

* :func:`solve_dfo` -- derivative-free linear-interpolation trust-region
  solver (COBYLA) for non-convex or noisy constrained problems.
* :func:`solve_convex_saa` -- smoothed-hinge + augmented-Lagrangian
  quasi-Newton method for problems declared convex.
* :func:`solve_lp` -- dense two-phase primal simplex with Bland's rule.

Plus :func:`adaptive_pof_oracle`, the sample-doubling failure-probability
estimator used inside reliability-constrained runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .risk import RiskEstimate, SampleSet, estimate_pof
from .saa import LpTableau, SaaProblem

__all__ = [
    "SolverConfig",
    "SolveTrace",
    "solve_dfo",
    "solve_convex_saa",
    "solve_lp",
    "LpSolution",
    "adaptive_pof_oracle",
    "smooth_hinge",
    "smooth_hinge_grad",
]

DEFAULT_SMOOTHING = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class SolverConfig:
    max_evals: int = 5000
    initial_trust_radius: float = 0.5
    final_trust_radius: float = 1e-8
    feasibility_tol: float = 1e-6
    smoothing_schedule: Tuple[float, ...] = DEFAULT_SMOOTHING
    seed: int = 0

    def __post_init__(self):
        if not self.final_trust_radius < self.initial_trust_radius:
            raise ValueError("final trust radius must be below the initial one")
        if self.feasibility_tol <= 0:
            raise ValueError("feasibility_tol must be positive")
        sched = tuple(self.smoothing_schedule)
        if any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] < 1e-8:
            raise ValueError("smoothing schedule must be strictly decreasing to >= 1e-8")
        object.__setattr__(self, "smoothing_schedule", sched)


@dataclass
class SolveTrace:
    iterates: List[Tuple[np.ndarray, float, float]] = field(default_factory=list)
    termination_reason: str = ""
    eval_count: int = 0
    x: Optional[np.ndarray] = None
    objective: float = np.nan
    violation: float = np.inf
    kkt_residual: Optional[float] = None

    @property
    def success(self) -> bool:
        return self.x is not None and self.termination_reason not in ("no_feasible_point",)


def _max_violation(p: SaaProblem, d: np.ndarray, aux: np.ndarray) -> float:
    if not p.constraints:
        return 0.0
    return max(max(c(d, aux) for c in p.constraints), 0.0)


def solve_dfo(p: SaaProblem, cfg: SolverConfig, x0: np.ndarray) -> SolveTrace:
    """Derivative-free constrained solve (linear-interpolation trust region).

    Works in variables normalized by the box ranges so one trust radius
    fits every coordinate.  Tracks the best feasible iterate across all
    evaluations; when nothing is feasible the least-infeasible iterate is
    returned and the termination reason records it.  Deterministic given
    (cfg, x0, problem).
    """
    x0 = np.asarray(x0, dtype=float)
    lo, hi = p.bounds[:, 0], p.bounds[:, 1]
    if np.any(x0 < lo - 1e-12) or np.any(x0 > hi + 1e-12):
        raise ValueError("x0 must lie inside the box bounds")

    # per-coordinate scale: box range where finite, start magnitude otherwise
    scale = np.where(np.isfinite(lo) & np.isfinite(hi), hi - lo,
                     np.maximum(1.0, np.abs(x0)))

    def to_x(u: np.ndarray) -> np.ndarray:
        return np.clip(u * scale, lo, hi)

    trace = SolveTrace()
    best = {"x": None, "obj": np.inf, "viol": np.inf}
    cache = {}

    def evaluate(u) -> Tuple[float, float, Tuple[float, ...]]:
        # probes may step outside the box; evaluate at the clipped point
        # (the explicit bound constraints steer back inside)
        u = np.asarray(u, dtype=float)
        key = u.tobytes()
        if key in cache:
            return cache[key]
        x = to_x(u)
        d, aux = p.split(x)
        obj = p.objective(d, aux)
        cons_vals = tuple(c(d, aux) for c in p.constraints)
        viol = max(max(cons_vals), 0.0) if cons_vals else 0.0
        trace.eval_count += 1
        trace.iterates.append((x.copy(), obj, viol))
        feas = viol <= cfg.feasibility_tol
        incumbent_feas = best["viol"] <= cfg.feasibility_tol
        # strict improvement only: ties keep the incumbent
        if (feas and (not incumbent_feas or obj < best["obj"])) or (
                not feas and not incumbent_feas and viol < best["viol"]):
            best.update(x=x.copy(), obj=obj, viol=viol)
        cache[key] = (obj, viol, cons_vals)
        return cache[key]

    cons = [{"type": "ineq", "fun": (lambda u, i=i: -evaluate(u)[2][i])}
            for i in range(len(p.constraints))]
    # keep iterates inside the (normalized) box even where the backend
    # treats bounds loosely
    for j in range(p.dim):
        if np.isfinite(lo[j]):
            cons.append({"type": "ineq",
                         "fun": (lambda u, j=j: u[j] - lo[j] / scale[j])})
        if np.isfinite(hi[j]):
            cons.append({"type": "ineq",
                         "fun": (lambda u, j=j: hi[j] / scale[j] - u[j])})

    res = minimize(
        lambda u: evaluate(u)[0], x0 / scale, method="COBYLA", constraints=cons,
        options={
            "rhobeg": cfg.initial_trust_radius,
            "tol": cfg.final_trust_radius,
            "maxiter": cfg.max_evals,
        },
    )

    if best["x"] is None:
        trace.termination_reason = "no_feasible_point"
        # fall back to the final iterate
        xf = to_x(np.asarray(res.x, float))
        d, aux = p.split(xf)
        trace.x = xf
        trace.objective = p.objective(d, aux)
        trace.violation = _max_violation(p, d, aux)
        return trace

    if best["viol"] > cfg.feasibility_tol:
        trace.termination_reason = "no_feasible_point"
    elif trace.eval_count >= cfg.max_evals:
        trace.termination_reason = "max_evals"
    else:
        trace.termination_reason = "converged"
    trace.x = best["x"]
    trace.objective = best["obj"]
    trace.violation = best["viol"]
    return trace


# ---------------------------------------------------------------------------
# smoothed hinge + augmented Lagrangian path
# ---------------------------------------------------------------------------

def smooth_hinge(u, tau: float):
    """C1 overestimator of max(0, u): hinge <= smooth <= hinge + tau/4.

    Quadratic splice on [-tau/2, tau/2]; the maximal overestimate is tau/8
    at u = 0.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(u > tau / 2, u, 0.0)
    mid = (np.abs(u) <= tau / 2)
    out = np.where(mid, (u + tau / 2) ** 2 / (2 * tau), out)
    return out


def smooth_hinge_grad(u, tau: float):
    u = np.asarray(u, dtype=float)
    g = np.where(u > tau / 2, 1.0, 0.0)
    mid = (np.abs(u) <= tau / 2)
    return np.where(mid, (u + tau / 2) / tau, g)


def _smoothed_constraint(p: SaaProblem, tau: float):
    """Smoothed hinge constraint value and gradient for hinge-form problems."""
    model, draws = p.model, p.batch.draws
    scale = 1.0 / (1.0 - p.alpha)
    t = p.t

    def value_grad(x: np.ndarray) -> Tuple[float, np.ndarray]:
        d, aux = x[: p.design_dim], x[p.design_dim:]
        anchor = float(aux[0])
        g = model.g_values(d, draws)
        u = g - anchor
        sv = smooth_hinge(u, tau)
        sg = smooth_hinge_grad(u, tau)
        val = anchor + scale * float(np.sum(np.sort(sv))) / u.size - t
        gd = scale * (sg @ model.g_grads(d, draws)) / u.size
        ganchor = 1.0 - scale * float(np.sum(np.sort(sg))) / u.size
        return val, np.concatenate([gd, [ganchor]])

    return value_grad


def _objective_with_grad(p: SaaProblem):
    model, draws = p.model, p.batch.draws

    def value_grad(x: np.ndarray) -> Tuple[float, np.ndarray]:
        d, aux = x[: p.design_dim], x[p.design_dim:]
        f = model.f_values(d, draws)
        val = float(np.sum(np.sort(f))) / f.size
        gd = np.mean(model.f_grads(d, draws), axis=0)
        return val, np.concatenate([gd, np.zeros(p.aux_dim)])

    return value_grad


def solve_convex_saa(p: SaaProblem, cfg: SolverConfig, x0: np.ndarray) -> SolveTrace:
    """Convex SAA solve: smoothing schedule outside, augmented Lagrangian inside.

    Each smoothing stage replaces the hinge with its C1 overestimator of
    width tau, then runs augmented-Lagrangian updates with a quasi-Newton
    (L-BFGS-B) inner minimizer until the smoothed constraint is feasible.
    The model must expose ``g_grads`` and ``f_grads``.
    """
    if p.convexity_flag != "declared_convex":
        raise ValueError("solve_convex_saa requires a declared-convex problem")
    if p.kind not in ("sq_constrained", "bpof_constrained"):
        raise ValueError("convex path supports hinge-form constrained problems only")

    x = np.asarray(x0, dtype=float).copy()
    lo, hi = p.bounds[:, 0], p.bounds[:, 1]
    bounds = list(zip(np.where(np.isfinite(lo), lo, None),
                      np.where(np.isfinite(hi), hi, None)))
    obj = _objective_with_grad(p)

    # scale the schedule by the spread of g at the start
    d0, aux0 = p.split(x)
    g0 = p.model.g_values(d0, p.batch.draws)
    scale_g = max(float(np.std(g0)), 1e-12)
    trace = SolveTrace()
    mu = 0.0
    rho = 10.0

    for stage, tau_rel in enumerate(cfg.smoothing_schedule):
        tau = tau_rel * scale_g
        con = _smoothed_constraint(p, tau)
        last = cfg.smoothing_schedule[-1] == tau_rel
        stage_tol = cfg.feasibility_tol if last else max(cfg.feasibility_tol, tau)
        prev_viol = np.inf

        for al_iter in range(40):
            def al_fun(xv, mu=mu, rho=rho):
                fv, fg = obj(xv)
                cv, cg = con(xv)
                s = max(0.0, mu / rho + cv)
                val = fv + 0.5 * rho * s * s - mu * mu / (2 * rho)
                grad = fg + rho * s * cg
                return val, grad

            res = minimize(al_fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxfun": cfg.max_evals, "ftol": 1e-16,
                                    "gtol": min(tau * 1e-3, 1e-9), "maxiter": 2000})
            x = np.asarray(res.x, float)
            trace.eval_count += int(res.nfev)
            cv, _ = con(x)
            fv, _ = obj(x)
            viol = max(cv, 0.0)
            trace.iterates.append((x.copy(), fv, viol))
            mu = max(0.0, mu + rho * cv)
            if viol <= stage_tol:
                break
            if viol > 0.25 * prev_viol:
                rho *= 10.0
            prev_viol = viol
        else:
            trace.termination_reason = "al_stalled"

    cv, cg = _smoothed_constraint(p, cfg.smoothing_schedule[-1] * scale_g)(x)
    fv, fg = obj(x)
    kkt = fg + mu * cg
    # project the KKT residual onto the box
    at_lo = np.isfinite(lo) & (x <= lo + 1e-12)
    at_hi = np.isfinite(hi) & (x >= hi - 1e-12)
    kkt = np.where(at_lo, np.minimum(kkt, 0.0), kkt)
    kkt = np.where(at_hi, np.maximum(kkt, 0.0), kkt)
    trace.kkt_residual = float(np.linalg.norm(kkt))

    d, aux = p.split(x)
    true_viol = _max_violation(p, d, aux)
    trace.x = x
    trace.objective = p.objective(d, aux)
    trace.violation = true_viol
    if not trace.termination_reason:
        trace.termination_reason = ("converged" if true_viol <= cfg.feasibility_tol
                                    else "infeasible_final")
    return trace


# ---------------------------------------------------------------------------
# dense simplex
# ---------------------------------------------------------------------------

@dataclass
class LpSolution:
    x: Optional[np.ndarray]
    objective: float
    status: str  # "optimal" | "unbounded" | "infeasible"
    dual_feasibility: float = np.nan  # most negative reduced cost at optimum


_TOL = 1e-9


def _simplex_iterate(tab: np.ndarray, basis: np.ndarray, cost: np.ndarray,
                     allow: np.ndarray) -> str:
    """Bland's-rule primal simplex on a canonical tableau (in place)."""
    m = tab.shape[0]
    while True:
        cb = cost[basis]
        reduced = cost - cb @ tab[:, :-1]
        entering = -1
        for j in np.flatnonzero(allow):
            if reduced[j] < -_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = tab[:, entering]
        rows = np.flatnonzero(col > _TOL)
        if rows.size == 0:
            return "unbounded"
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        # Bland tie-break: smallest basis index among minimal ratios
        tie = rows[np.abs(ratios - best) <= _TOL * (1 + abs(best))]
        leave = tie[np.argmin(basis[tie])]
        piv = tab[leave, entering]
        tab[leave] /= piv
        for i in range(m):
            if i != leave and abs(tab[i, entering]) > 0:
                tab[i] -= tab[i, entering] * tab[leave]
        basis[leave] = entering


def solve_lp(t: LpTableau) -> LpSolution:
    """Two-phase dense primal simplex with Bland's rule.

    Bounded variables are shifted/split into the nonnegative standard form;
    optimality is certified by dual feasibility of the reduced costs.
    """
    n = t.c.size
    # map original variables into nonnegative ones
    # each entry: (kind, data); kind "shift": x = lo + y; "split": x = yp - yn
    mapping = []
    cols = []  # column multiplier applied to A and c per new variable
    new_lo_rows = []  # (new_var_index, upper_value) rows appended later
    shift = np.zeros(n)
    for j in range(n):
        lo_j, hi_j = t.lo[j], t.hi[j]
        if np.isfinite(lo_j):
            mapping.append(("shift", j))
            shift[j] = lo_j
            cols.append((j, 1.0))
            if np.isfinite(hi_j):
                new_lo_rows.append((len(cols) - 1, hi_j - lo_j))
        elif np.isfinite(hi_j):
            # x = hi - y, y >= 0
            mapping.append(("mirror", j))
            shift[j] = hi_j
            cols.append((j, -1.0))
        else:
            mapping.append(("split", j))
            cols.append((j, 1.0))
            cols.append((j, -1.0))

    nv = len(cols)
    a = np.zeros((t.b_ub.size + len(new_lo_rows), nv))
    c = np.zeros(nv)
    for k, (j, s) in enumerate(cols):
        a[: t.b_ub.size, k] = s * t.a_ub[:, j]
        c[k] = s * t.c[j]
    b = t.b_ub - t.a_ub @ shift
    b = np.concatenate([b, [ub for _, ub in new_lo_rows]])
    for r, (k, _) in enumerate(new_lo_rows):
        a[t.b_ub.size + r, k] = 1.0

    m = b.size
    # equality form with slacks; flip rows with negative rhs and add artificials
    neg = b < 0
    a_eq = a.copy()
    b_eq = b.copy()
    slack = np.eye(m)
    a_eq[neg] *= -1
    b_eq[neg] *= -1
    slack[neg] *= -1
    n_art = int(np.count_nonzero(neg))
    art_cols = np.zeros((m, n_art))
    art_idx = np.flatnonzero(neg)
    for k, i in enumerate(art_idx):
        art_cols[i, k] = 1.0

    full = np.hstack([a_eq, slack, art_cols])
    total = full.shape[1]
    tab = np.hstack([full, b_eq[:, None]])
    basis = np.empty(m, dtype=int)
    k_art = 0
    for i in range(m):
        if neg[i]:
            basis[i] = nv + m + k_art
            k_art += 1
        else:
            basis[i] = nv + i

    if n_art > 0:
        cost1 = np.zeros(total)
        cost1[nv + m:] = 1.0
        allow = np.ones(total, dtype=bool)
        status = _simplex_iterate(tab, basis, cost1, allow)
        phase1 = cost1[basis] @ tab[:, -1]
        if status != "optimal" or phase1 > 1e-7:
            return LpSolution(x=None, objective=np.nan, status="infeasible")
        # drive any degenerate artificials out of the basis
        for i in range(m):
            if basis[i] >= nv + m:
                row = tab[i, : nv + m]
                j = next((jj for jj in range(nv + m) if abs(row[jj]) > _TOL), None)
                if j is None:
                    continue  # redundant row
                piv = tab[i, j]
                tab[i] /= piv
                for r in range(m):
                    if r != i and abs(tab[r, j]) > 0:
                        tab[r] -= tab[r, j] * tab[i]
                basis[i] = j

    cost2 = np.zeros(total)
    cost2[:nv] = c
    allow = np.ones(total, dtype=bool)
    allow[nv + m:] = False  # artificials stay out
    status = _simplex_iterate(tab, basis, cost2, allow)
    if status == "unbounded":
        return LpSolution(x=None, objective=np.nan, status="unbounded")

    y = np.zeros(total)
    y[basis] = tab[:, -1]
    x = shift.copy()
    for k, (j, s) in enumerate(cols):
        x[j] += s * y[k]
    reduced = cost2 - cost2[basis] @ tab[:, : total]
    dual_feas = float(min(reduced[allow].min(), 0.0))
    obj = float(t.c @ x) + t.c0
    if dual_feas < -1e-9:
        return LpSolution(x=x, objective=obj, status="numerical_breakdown",
                          dual_feasibility=dual_feas)
    return LpSolution(x=x, objective=obj, status="optimal", dual_feasibility=dual_feas)


# ---------------------------------------------------------------------------
# adaptive PoF oracle
# ---------------------------------------------------------------------------

def adaptive_pof_oracle(model, design: np.ndarray, t: float,
                        target_rel_err: float = 0.01, cap: int = 100_000,
                        seed: int = 0, stream_id: int = 0,
                        m0: int = 1000) -> RiskEstimate:
    """Double the sample count until the MC relative error meets the target.

    Uses sqrt((1 - p) / (p m)) as the relative-error proxy; stops at the
    cap.  Stream ids are derived per doubling tier so that repeated calls
    at different designs share common random numbers tier by tier.
    Returns certified=False when the error target could not be met (in
    particular when no failures were observed at the cap).
    """
    if target_rel_err <= 0:
        raise ValueError("target_rel_err must be positive")
    m = min(m0, cap)
    tier = 0
    while True:
        batch = model.sample(m, seed=seed, stream_id=stream_id * 1000 + tier)
        g = model.g_values(design, batch.draws)
        est = estimate_pof(SampleSet(g), t)
        p = est.value
        if p > 0:
            rel = float(np.sqrt((1.0 - p) / (p * m)))
            if rel <= target_rel_err:
                return RiskEstimate(value=p, m=m, std_error=est.std_error,
                                    certified=True)
        if m >= cap:
            return RiskEstimate(value=p, m=m, std_error=est.std_error,
                                certified=False)
        m = min(2 * m, cap)
        tier += 1
