"""Experiment harness: formulations, runs, studies, persistence.

Wires the benchmark problems and solvers into the seven optimization
formulations, computes post-hoc risk certificates at every optimum on a
fresh seed-disjoint batch, and persists runs as human-editable configs
plus plot-ready CSV tables.  Re-running a persisted config reproduces the
CSV outputs bit-identically.
"""

from __future__ import annotations

import configparser
import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .risk import (
    RiskEstimate,
    SampleSet,
    analytic_threepoint,
    estimate_bpof_alg2,
    estimate_pof,
    estimate_quantile,
    estimate_superquantile,
    sample_threepoint,
)
from .saa import (
    SaaProblem,
    build_bpof_constrained,
    build_bpof_objective,
    build_superquantile_constrained,
)
from .solvers import SolveTrace, SolverConfig, adaptive_pof_oracle, solve_convex_saa, solve_dfo
from .problems import CoolingFinModel, ShortColumnConvexModel, ShortColumnModel

__all__ = [
    "FORMULATION_IDS",
    "PROBLEM_IDS",
    "FormulationSpec",
    "OptimizationRun",
    "make_model",
    "run",
    "frontier",
    "conservativeness_study",
    "remark4_study",
    "save_config",
    "load_config",
    "persist_run",
    "replay",
    "write_csv",
    "FRONTIER_COLUMNS",
]

FORMULATION_IDS = (
    "rbdo_pof",          # min E[f]        s.t. PoF(g > t) <= 1 - alpha
    "quantile_equiv",    # min E[f]        s.t. Q_alpha[g] <= t
    "sq_constrained",    # min E[f]        s.t. Qbar_alpha[g] <= t   (hinge form)
    "sq_objective",      # min Qbar_alpha[g]  s.t. Qbar_beta[f] <= budget
    "bpof_constrained",  # min E[f]        s.t. bPoF_t(g) <= 1 - alpha (hinge form)
    "bpof_objective",    # min bPoF_t(g)   s.t. E[f] <= budget
    "pof_objective",     # min PoF_t(g)    s.t. E[f] <= budget
)

PROBLEM_IDS = ("short_column", "cooling_fin")

_HINGE_FORMS = ("sq_constrained", "bpof_constrained")
_NEEDS_ALPHA = ("rbdo_pof", "quantile_equiv", "sq_constrained", "sq_objective",
                "bpof_constrained")
_NEEDS_BUDGET = ("sq_objective", "bpof_objective", "pof_objective")

# the certificate batch must share no stream with optimization batches
_EVAL_SEED_OFFSET = 10_000_019
_EVAL_STREAM = 7


@dataclass(frozen=True)
class FormulationSpec:
    """One optimization formulation with its risk levels and sampling plan.

    ``alpha`` is the risk level on the limit state g, ``beta`` the risk
    level on the objective f (superquantile-objective form only), ``t``
    the failure threshold, and ``budget`` the cap C_T on the objective.
    """

    id: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    t: Optional[float] = None
    budget: Optional[float] = None
    m: int = 10_000
    seed: int = 0
    solver: str = "auto"  # auto | dfo | convex

    def __post_init__(self):
        if self.id not in FORMULATION_IDS:
            raise ValueError(f"unknown formulation id {self.id!r}")
        if self.m < 100:
            raise ValueError("sample size m must be at least 100")
        if self.solver not in ("auto", "dfo", "convex"):
            raise ValueError("solver must be one of auto, dfo, convex")
        if self.id in _NEEDS_ALPHA:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"{self.id} needs alpha strictly inside (0, 1)")
        if self.t is None:
            raise ValueError("threshold t is required")
        if self.id in _NEEDS_BUDGET and self.budget is None:
            raise ValueError(f"{self.id} needs a budget")
        if self.id == "sq_objective":
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise ValueError("sq_objective needs beta strictly inside (0, 1)")


@dataclass
class OptimizationRun:
    """A completed optimization with post-hoc risk certificates.

    Certificates are evaluated at the returned design on a fresh batch of
    ``m_eval`` draws whose seed and streams are disjoint from every
    optimization batch.
    """

    problem_id: str
    spec: FormulationSpec
    design: np.ndarray            # natural design variables
    objective: float              # solver objective at the optimum
    cost: float                   # deterministic design cost (mean objective)
    trace: SolveTrace
    certificates: Dict[str, RiskEstimate]
    m_eval: int
    eval_seed: int
    aux: Optional[np.ndarray] = None
    extras: Dict[str, object] = field(default_factory=dict)


def make_model(problem_id: str, *, mesh_resolution: int = 2,
               truncation_sigmas: Tuple[float, float] = (-4.0, 2.0),
               convex: bool = False):
    """Instantiate a registered benchmark model."""
    if problem_id == "short_column":
        return ShortColumnConvexModel() if convex else ShortColumnModel()
    if problem_id == "cooling_fin":
        if convex:
            raise ValueError("the cooling fin model has no convex reformulation")
        return CoolingFinModel(resolution=mesh_resolution,
                               truncation_sigmas=truncation_sigmas)
    raise ValueError(f"unknown problem id {problem_id!r}")


def _to_natural(model, x: np.ndarray) -> np.ndarray:
    return model.to_natural(x) if hasattr(model, "to_natural") else np.asarray(x, float)


def _mean_f_problem(model, batch, kind: str) -> Tuple:
    draws = batch.draws

    def objective(d, aux):
        f = np.sort(model.f_values(d, draws))
        return float(np.sum(f)) / f.size

    return objective


def _build_problem(spec: FormulationSpec, model, batch, *,
                   oracle_cap: int, oracle_m0: int,
                   hinge_aux: bool = False) -> SaaProblem:
    """Assemble the SAA (or noisy) problem for one formulation.

    ``hinge_aux`` selects the explicit-anchor hinge form used by the convex
    solver; the derivative-free path gets the equivalent anchor-free
    constraint (the inner minimization has a closed form), which keeps the
    search space small.
    """
    draws = batch.draws
    t = spec.t
    flag = "declared_convex" if getattr(model, "is_convex", False) else "unknown"
    db = np.asarray(model.design_bounds, float)
    mean_f = _mean_f_problem(model, batch, spec.id)

    if spec.id == "sq_constrained":
        if hinge_aux:
            return build_superquantile_constrained(model, batch, spec.alpha, t)

        def constraint(d, aux):
            g = model.g_values(d, draws)
            return estimate_superquantile(SampleSet(g), spec.alpha).value - t

        return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=mean_f,
                          constraints=[constraint], bounds=db,
                          convexity_flag="unknown", kind=spec.id,
                          model=model, batch=batch, alpha=spec.alpha, t=t)
    if spec.id == "bpof_constrained":
        if hinge_aux:
            return build_bpof_constrained(model, batch, spec.alpha, t)

        def constraint(d, aux):
            g = model.g_values(d, draws)
            return estimate_bpof_alg2(SampleSet(g), t).value - (1.0 - spec.alpha)

        return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=mean_f,
                          constraints=[constraint], bounds=db,
                          convexity_flag="unknown", kind=spec.id,
                          model=model, batch=batch, alpha=spec.alpha, t=t)
    if spec.id == "bpof_objective":
        return build_bpof_objective(model, batch, t, spec.budget)

    if spec.id == "rbdo_pof":
        # noisy PoF constraint: sample-doubling oracle with common random
        # numbers tier by tier, so re-evaluations at nearby designs see the
        # same draws and the optimizer is not chasing estimator noise
        def constraint(d, aux):
            est = adaptive_pof_oracle(model, d, t, cap=oracle_cap,
                                      seed=spec.seed, stream_id=1, m0=oracle_m0)
            return est.value - (1.0 - spec.alpha)

        return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=mean_f,
                          constraints=[constraint], bounds=db,
                          convexity_flag="unknown", kind=spec.id,
                          model=model, batch=batch, alpha=spec.alpha, t=t)

    if spec.id == "quantile_equiv":
        def constraint(d, aux):
            g = model.g_values(d, draws)
            return estimate_quantile(SampleSet(g), spec.alpha).value - t

        return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=mean_f,
                          constraints=[constraint], bounds=db,
                          convexity_flag="unknown", kind=spec.id,
                          model=model, batch=batch, alpha=spec.alpha, t=t)

    if spec.id == "sq_objective":
        def objective(d, aux):
            g = model.g_values(d, draws)
            return estimate_superquantile(SampleSet(g), spec.alpha).value

        def constraint(d, aux):
            f = model.f_values(d, draws)
            return estimate_superquantile(SampleSet(f), spec.beta).value - spec.budget

        return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=objective,
                          constraints=[constraint], bounds=db,
                          convexity_flag=flag, kind=spec.id,
                          model=model, batch=batch, alpha=spec.alpha, t=t,
                          budget=spec.budget)

    # pof_objective
    def objective(d, aux):
        g = model.g_values(d, draws)
        return float(np.count_nonzero(g > t)) / g.size

    def constraint(d, aux):
        return mean_f(d, aux) - spec.budget

    return SaaProblem(design_dim=db.shape[0], aux_dim=0, objective=objective,
                      constraints=[constraint], bounds=db,
                      convexity_flag="unknown", kind=spec.id,
                      model=model, batch=batch, t=t, budget=spec.budget)


def _initial_point(p: SaaProblem, spec: FormulationSpec, model, x0_design) -> np.ndarray:
    d0 = (np.asarray(x0_design, float) if x0_design is not None
          else np.asarray(model.initial_design(), float))
    if p.aux_dim == 0:
        return d0
    # anchor the aux variable at a tail statistic of g at the start design
    g0 = SampleSet(model.g_values(d0, p.batch.draws))
    if p.kind == "sq_constrained":
        aux0 = estimate_quantile(g0, spec.alpha).value
    else:
        est = estimate_bpof_alg2(g0, spec.t)
        aux0 = est.aux if est.aux is not None else spec.t - float(np.std(g0.values)) - 1e-6
        aux0 = min(aux0, p.bounds[-1, 1])
    return np.concatenate([d0, [aux0]])


def run(spec: FormulationSpec, problem_id: str, *,
        m_eval: int = 500_000, mesh_resolution: int = 2,
        truncation_sigmas: Tuple[float, float] = (-4.0, 2.0),
        solver_config: Optional[SolverConfig] = None,
        oracle_cap: int = 100_000, oracle_m0: int = 1000,
        x0_design=None) -> OptimizationRun:
    """Solve one formulation on one problem and certify the optimum.

    The convex solver path is taken exactly when the model declares
    convexity and the formulation is one of the hinge forms; everything
    else goes through the derivative-free solver.  Certificates (PoF,
    quantile, superquantile, bPoF of g at the optimum) are computed on a
    fresh batch whose seed and stream are disjoint from optimization.
    """
    if problem_id not in PROBLEM_IDS:
        raise ValueError(f"unknown problem id {problem_id!r}")
    want_convex = spec.solver in ("auto", "convex") and spec.id in _HINGE_FORMS
    convex_available = problem_id == "short_column"
    use_convex = want_convex and convex_available
    if spec.solver == "convex" and not use_convex:
        raise ValueError("convex solver requires a hinge-form formulation on a "
                         "problem with a convex reformulation")

    model = make_model(problem_id, mesh_resolution=mesh_resolution,
                       truncation_sigmas=truncation_sigmas, convex=use_convex)
    batch = model.sample(spec.m, seed=spec.seed, stream_id=0)
    p = _build_problem(spec, model, batch, oracle_cap=oracle_cap,
                       oracle_m0=oracle_m0, hinge_aux=use_convex)
    cfg = solver_config or SolverConfig()

    x0d = x0_design
    if x0d is not None and hasattr(model, "from_natural"):
        x0d = model.from_natural(x0d)
    x0 = _initial_point(p, spec, model, x0d)
    if use_convex and p.convexity_flag == "declared_convex":
        trace = solve_convex_saa(p, cfg, x0)
    else:
        trace = solve_dfo(p, cfg, x0)
    if trace.x is None:
        raise RuntimeError(f"solver returned no iterate ({trace.termination_reason})")

    d_model, aux = p.split(trace.x)
    design = _to_natural(model, d_model)

    eval_seed = spec.seed + _EVAL_SEED_OFFSET
    eval_batch = model.sample(m_eval, seed=eval_seed, stream_id=_EVAL_STREAM)
    g_eval = SampleSet(model.g_values(d_model, eval_batch.draws))
    level = spec.alpha if spec.alpha is not None else 0.95
    certificates = {
        "pof": estimate_pof(g_eval, spec.t),
        "quantile": estimate_quantile(g_eval, level),
        "superquantile": estimate_superquantile(g_eval, level),
        "bpof": estimate_bpof_alg2(g_eval, spec.t),
    }
    cost = float(np.mean(model.f_values(d_model, eval_batch.draws[:1])))
    return OptimizationRun(
        problem_id=problem_id, spec=spec, design=design,
        objective=trace.objective, cost=cost, trace=trace,
        certificates=certificates, m_eval=m_eval, eval_seed=eval_seed,
        aux=aux if aux.size else None,
        extras={"mesh_resolution": mesh_resolution,
                "truncation_sigmas": tuple(truncation_sigmas),
                "certificate_level": level},
    )


# ---------------------------------------------------------------------------
# frontier sweep
# ---------------------------------------------------------------------------

FRONTIER_COLUMNS = (
    "cell", "formulation", "alpha", "one_minus_alpha", "m", "seed", "status",
    "design", "cost", "objective", "cert_pof", "cert_pof_se", "cert_quantile",
    "cert_superquantile", "cert_bpof", "m_eval", "error",
)


def _frontier_cell(args) -> Dict[str, object]:
    (idx, fid, alpha, problem_id, m, seed, t, m_eval, mesh_resolution,
     oracle_cap, oracle_m0, cfg_kwargs) = args
    row = {k: "" for k in FRONTIER_COLUMNS}
    row.update(cell=idx, formulation=fid, alpha=alpha,
               one_minus_alpha=1.0 - alpha, m=m, seed=seed, m_eval=m_eval)
    try:
        spec = FormulationSpec(id=fid, alpha=alpha, t=t, m=m, seed=seed)
        cfg = SolverConfig(**cfg_kwargs) if cfg_kwargs else None
        out = run(spec, problem_id, m_eval=m_eval, mesh_resolution=mesh_resolution,
                  oracle_cap=oracle_cap, oracle_m0=oracle_m0, solver_config=cfg)
        row.update(
            status="ok",
            design=";".join(f"{v:.12g}" for v in out.design),
            cost=f"{out.cost:.12g}",
            objective=f"{out.objective:.12g}",
            cert_pof=f"{out.certificates['pof'].value:.12g}",
            cert_pof_se=f"{out.certificates['pof'].std_error:.12g}",
            cert_quantile=f"{out.certificates['quantile'].value:.12g}",
            cert_superquantile=f"{out.certificates['superquantile'].value:.12g}",
            cert_bpof=f"{out.certificates['bpof'].value:.12g}",
        )
    except Exception as exc:  # partial failures recorded per cell
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def frontier(problem_id: str, formulation_ids: Sequence[str],
             alphas: Sequence[float], m: int = 10_000, seed: int = 0, *,
             t: float = 1.0, m_eval: int = 500_000, mesh_resolution: int = 2,
             oracle_cap: int = 100_000, oracle_m0: int = 1000,
             workers: int = 1, out_path=None,
             solver_config_kwargs: Optional[dict] = None) -> List[Dict[str, object]]:
    """Sweep (formulation, alpha) cells; one certified optimum per cell.

    Cells share the base seed (common random numbers across the grid) but
    are otherwise isolated, so they can run in parallel; output order is
    deterministic by cell index regardless of completion order.  Failures
    are recorded in the row and do not stop the sweep.
    """
    alphas = list(alphas)
    if len(alphas) < 2:
        raise ValueError("frontier needs at least 2 grid points")
    tasks = []
    idx = 0
    for fid in formulation_ids:
        for alpha in alphas:
            tasks.append((idx, fid, float(alpha), problem_id, m, seed, t, m_eval,
                          mesh_resolution, oracle_cap, oracle_m0,
                          solver_config_kwargs or {}))
            idx += 1

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_frontier_cell, tasks))
    else:
        rows = [_frontier_cell(task) for task in tasks]
    rows.sort(key=lambda r: r["cell"])
    if out_path is not None:
        write_csv(out_path, FRONTIER_COLUMNS, rows)
    return rows


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

_STUDY_DESIGN = (3.3271, 3.2015, 1.0053, 1.0)
_TRUNCATION_VARIANTS = ((-4.0, 2.0), (-2.0, 2.0), (-1.0, 1.0))


def conservativeness_study(problem_id: str = "cooling_fin",
                           design: Sequence[float] = _STUDY_DESIGN,
                           alpha: float = 0.95, m: int = 100_000, seed: int = 0, *,
                           mesh_resolution: int = 2,
                           variants: Sequence[Tuple[float, float]] = _TRUNCATION_VARIANTS,
                           bins: int = 60, out_path=None) -> Dict[str, object]:
    """Quantile vs superquantile gap across input-truncation widths.

    For each truncation range of the random perturbations, estimates the
    alpha-quantile and alpha-superquantile of the limit state at a fixed
    design and reports the percentage difference; wider truncation means a
    fatter tail and a larger gap.
    """
    design = np.asarray(design, float)
    rows, hists = [], {}
    for lo_s, hi_s in variants:
        model = make_model(problem_id, mesh_resolution=mesh_resolution,
                           truncation_sigmas=(lo_s, hi_s))
        batch = model.sample(m, seed=seed, stream_id=0)
        g = SampleSet(model.g_values(design, batch.draws))
        q = estimate_quantile(g, alpha).value
        qbar = estimate_superquantile(g, alpha).value
        label = f"mu{lo_s:+g}s_mu{hi_s:+g}s"
        rows.append({
            "variant": label, "lo_sigma": lo_s, "hi_sigma": hi_s,
            "alpha": alpha, "m": m,
            "quantile": f"{q:.12g}", "superquantile": f"{qbar:.12g}",
            "pct_diff": f"{100.0 * (qbar - q) / q:.12g}",
        })
        counts, edges = np.histogram(g.values, bins=bins)
        hists[label] = (counts, edges)
    if out_path is not None:
        write_csv(out_path, ("variant", "lo_sigma", "hi_sigma", "alpha", "m",
                             "quantile", "superquantile", "pct_diff"), rows)
    return {"rows": rows, "histograms": hists, "design": design}


def remark4_study(t_min: float = -1.5, t_max: float = 1.5, step: float = 0.01,
                  m: int = 1_000_000, seed: int = 0,
                  out_path=None) -> List[Dict[str, object]]:
    """Analytic vs sampled PoF/bPoF of the three-point law over a t grid.

    Shows bPoF varying continuously in t where PoF jumps; emits the curve
    data as CSV rows.
    """
    if not (t_min <= -1.5 and t_max >= 1.5):
        raise ValueError("t grid must cover [-1.5, 1.5]")
    ts = np.arange(t_min, t_max + step / 2, step)
    s = sample_threepoint(m, seed=seed, stream_id=0)
    rows = []
    for t in ts:
        pof, bpof = analytic_threepoint(float(t))
        rows.append({
            "t": f"{t:.12g}",
            "analytic_pof": f"{pof:.12g}",
            "analytic_bpof": f"{bpof:.12g}",
            "sampled_pof": f"{estimate_pof(s, float(t)).value:.12g}",
            "sampled_bpof": f"{estimate_bpof_alg2(s, float(t)).value:.12g}",
        })
    if out_path is not None:
        write_csv(out_path, ("t", "analytic_pof", "analytic_bpof",
                             "sampled_pof", "sampled_bpof"), rows)
    return rows


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def write_csv(path, columns: Sequence[str], rows: Sequence[Dict[str, object]]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def save_config(path, problem_id: str, spec: FormulationSpec, *,
                m_eval: int = 500_000, mesh_resolution: int = 2,
                truncation_sigmas: Tuple[float, float] = (-4.0, 2.0),
                oracle_cap: int = 100_000, oracle_m0: int = 1000,
                solver_config: Optional[SolverConfig] = None):
    """Write one run's parameters as a key = value config file."""
    cp = configparser.ConfigParser()
    cp["problem"] = {
        "id": problem_id,
        "mesh_resolution": str(mesh_resolution),
        "truncation_lo_sigma": repr(truncation_sigmas[0]),
        "truncation_hi_sigma": repr(truncation_sigmas[1]),
    }
    form = {"id": spec.id, "threshold": repr(spec.t)}
    if spec.alpha is not None:
        form["alpha"] = repr(spec.alpha)
    if spec.beta is not None:
        form["beta"] = repr(spec.beta)
    if spec.budget is not None:
        form["budget"] = repr(spec.budget)
    cp["formulation"] = form
    cp["sampling"] = {"m": str(spec.m), "seed": str(spec.seed),
                      "m_eval": str(m_eval)}
    cfg = solver_config or SolverConfig()
    cp["solver"] = {
        "selection": spec.solver,
        "max_evals": str(cfg.max_evals),
        "initial_trust_radius": repr(cfg.initial_trust_radius),
        "final_trust_radius": repr(cfg.final_trust_radius),
        "feasibility_tol": repr(cfg.feasibility_tol),
        "oracle_cap": str(oracle_cap),
        "oracle_m0": str(oracle_m0),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        cp.write(fh)


def load_config(path) -> Tuple[str, FormulationSpec, Dict[str, object]]:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    prob = cp["problem"]
    form = cp["formulation"]
    samp = cp["sampling"]
    solv = cp["solver"]
    spec = FormulationSpec(
        id=form["id"],
        alpha=form.getfloat("alpha", fallback=None),
        beta=form.getfloat("beta", fallback=None),
        t=form.getfloat("threshold"),
        budget=form.getfloat("budget", fallback=None),
        m=samp.getint("m"),
        seed=samp.getint("seed"),
        solver=solv.get("selection", "auto"),
    )
    extras = {
        "m_eval": samp.getint("m_eval"),
        "mesh_resolution": prob.getint("mesh_resolution"),
        "truncation_sigmas": (prob.getfloat("truncation_lo_sigma"),
                              prob.getfloat("truncation_hi_sigma")),
        "oracle_cap": solv.getint("oracle_cap"),
        "oracle_m0": solv.getint("oracle_m0"),
        "solver_config": SolverConfig(
            max_evals=solv.getint("max_evals"),
            initial_trust_radius=solv.getfloat("initial_trust_radius"),
            final_trust_radius=solv.getfloat("final_trust_radius"),
            feasibility_tol=solv.getfloat("feasibility_tol"),
        ),
    }
    return prob["id"], spec, extras


def persist_run(out: OptimizationRun, root, run_id: Optional[str] = None, *,
                solver_config: Optional[SolverConfig] = None) -> Path:
    """Write config, trace.csv, and certificates.json under runs/<ts>-<id>/."""
    run_id = run_id or out.spec.id
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run_dir = Path(root) / f"{stamp}-{run_id}"
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(run_dir / "config", out.problem_id, out.spec,
                m_eval=out.m_eval,
                mesh_resolution=out.extras.get("mesh_resolution", 2),
                truncation_sigmas=out.extras.get("truncation_sigmas", (-4.0, 2.0)),
                solver_config=solver_config)
    rows = [{"eval": i, "objective": f"{obj:.12g}", "violation": f"{viol:.12g}",
             "x": ";".join(f"{v:.12g}" for v in x)}
            for i, (x, obj, viol) in enumerate(out.trace.iterates)]
    write_csv(run_dir / "trace.csv", ("eval", "objective", "violation", "x"), rows)
    certs = {
        name: {"value": est.value, "std_error": est.std_error, "m": est.m}
        for name, est in out.certificates.items()
    }
    payload = {
        "problem": out.problem_id,
        "formulation": out.spec.id,
        "design": [float(v) for v in out.design],
        "objective": out.objective,
        "cost": out.cost,
        "certificates": certs,
        "certificate_level": out.extras.get("certificate_level"),
        "threshold": out.spec.t,
        "m_eval": out.m_eval,
        "eval_seed": out.eval_seed,
        "termination": out.trace.termination_reason,
        "eval_count": out.trace.eval_count,
    }
    with open(run_dir / "certificates.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return run_dir


def replay(config_path) -> OptimizationRun:
    """Re-run a persisted config; outputs are bit-identical to the original."""
    problem_id, spec, extras = load_config(config_path)
    return run(spec, problem_id,
               m_eval=extras["m_eval"],
               mesh_resolution=extras["mesh_resolution"],
               truncation_sigmas=extras["truncation_sigmas"],
               oracle_cap=extras["oracle_cap"],
               oracle_m0=extras["oracle_m0"],
               solver_config=extras["solver_config"])
