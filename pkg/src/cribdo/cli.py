"""Command-line interface: estimate / optimize / frontier / conservativeness / remark4."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .harness import (
    FORMULATION_IDS,
    PROBLEM_IDS,
    FormulationSpec,
    conservativeness_study,
    frontier,
    make_model,
    persist_run,
    remark4_study,
    run,
)
from .risk import SampleSet, estimate_bpof_alg2, estimate_pof, estimate_quantile, estimate_superquantile
from .solvers import SolverConfig


def _parse_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_common(sub):
    sub.add_argument("--problem", choices=PROBLEM_IDS, default="short_column")
    sub.add_argument("--alpha", type=str, default="0.95",
                     help="risk level(s); comma-separated for frontier grids")
    sub.add_argument("--threshold", type=float, default=None,
                     help="failure threshold t (default: problem-specific)")
    sub.add_argument("--samples", type=int, default=10_000,
                     help="Monte Carlo sample size m")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--mesh-resolution", type=int, default=2,
                     help="cooling fin mesh refinement level")
    sub.add_argument("--out", type=str, default=None, help="output file or directory")


def _default_threshold(problem: str) -> float:
    return 1.0 if problem == "short_column" else 0.35


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cribdo",
        description="Risk-based design optimization: estimators, solvers, benchmarks.")
    subs = parser.add_subparsers(dest="command", required=True)

    est = subs.add_parser("estimate", help="risk measures of g at a design")
    _add_common(est)
    est.add_argument("--design", type=str, default=None,
                     help="comma-separated design variables (default: initial design)")

    opt = subs.add_parser("optimize", help="solve one formulation, certify the optimum")
    _add_common(opt)
    opt.add_argument("--formulation", choices=FORMULATION_IDS, required=True)
    opt.add_argument("--beta", type=float, default=None)
    opt.add_argument("--budget", type=float, default=None)
    opt.add_argument("--m-eval", type=int, default=500_000)
    opt.add_argument("--max-evals", type=int, default=5000)
    opt.add_argument("--oracle-cap", type=int, default=100_000)

    fro = subs.add_parser("frontier", help="sweep alpha grid per formulation")
    _add_common(fro)
    fro.add_argument("--formulation", type=str, default="rbdo_pof,bpof_constrained",
                     help="comma-separated formulation ids")
    fro.add_argument("--m-eval", type=int, default=500_000)
    fro.add_argument("--workers", type=int, default=1)
    fro.add_argument("--oracle-cap", type=int, default=100_000)

    con = subs.add_parser("conservativeness",
                          help="quantile vs superquantile across truncation widths")
    _add_common(con)
    con.add_argument("--design", type=str, default="3.3271,3.2015,1.0053,1.0")

    rem = subs.add_parser("remark4", help="PoF/bPoF continuity curves, three-point law")
    rem.add_argument("--samples", type=int, default=1_000_000)
    rem.add_argument("--seed", type=int, default=0)
    rem.add_argument("--step", type=float, default=0.01)
    rem.add_argument("--out", type=str, default=None)

    args = parser.parse_args(argv)

    if args.command == "estimate":
        model = make_model(args.problem, mesh_resolution=args.mesh_resolution)
        design = (np.array(_parse_floats(args.design)) if args.design
                  else model.initial_design())
        t = args.threshold if args.threshold is not None else _default_threshold(args.problem)
        alpha = _parse_floats(args.alpha)[0]
        batch = model.sample(args.samples, seed=args.seed, stream_id=0)
        g = SampleSet(model.g_values(design, batch.draws))
        result = {
            "problem": args.problem,
            "design": [float(v) for v in design],
            "threshold": t, "alpha": alpha, "m": args.samples, "seed": args.seed,
            "pof": estimate_pof(g, t).value,
            "quantile": estimate_quantile(g, alpha).value,
            "superquantile": estimate_superquantile(g, alpha).value,
            "bpof": estimate_bpof_alg2(g, t).value,
        }
        text = json.dumps(result, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n")
        print(text)
        return 0

    if args.command == "optimize":
        t = args.threshold if args.threshold is not None else _default_threshold(args.problem)
        alpha = _parse_floats(args.alpha)[0]
        spec = FormulationSpec(id=args.formulation, alpha=alpha, beta=args.beta,
                               t=t, budget=args.budget, m=args.samples,
                               seed=args.seed)
        cfg = SolverConfig(max_evals=args.max_evals)
        out = run(spec, args.problem, m_eval=args.m_eval,
                  mesh_resolution=args.mesh_resolution, solver_config=cfg,
                  oracle_cap=args.oracle_cap)
        summary = {
            "design": [float(v) for v in out.design],
            "objective": out.objective,
            "cost": out.cost,
            "termination": out.trace.termination_reason,
            "certificates": {k: v.value for k, v in out.certificates.items()},
        }
        if args.out:
            run_dir = persist_run(out, args.out, solver_config=cfg)
            summary["run_dir"] = str(run_dir)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0

    if args.command == "frontier":
        t = args.threshold if args.threshold is not None else _default_threshold(args.problem)
        alphas = _parse_floats(args.alpha)
        fids = [f for f in args.formulation.split(",") if f]
        out_path = args.out or "frontier.csv"
        rows = frontier(args.problem, fids, alphas, m=args.samples, seed=args.seed,
                        t=t, m_eval=args.m_eval, mesh_resolution=args.mesh_resolution,
                        oracle_cap=args.oracle_cap, workers=args.workers,
                        out_path=out_path)
        failed = [r for r in rows if r["status"] != "ok"]
        print(f"wrote {len(rows)} cells to {out_path} ({len(failed)} failed)")
        for r in failed:
            print(f"  cell {r['cell']} ({r['formulation']}, alpha={r['alpha']}): "
                  f"{r['error']}", file=sys.stderr)
        return 0 if not failed else 1

    if args.command == "conservativeness":
        alpha = _parse_floats(args.alpha)[0]
        design = _parse_floats(args.design)
        out_path = args.out or "conservativeness.csv"
        result = conservativeness_study(args.problem, design, alpha=alpha,
                                        m=args.samples, seed=args.seed,
                                        mesh_resolution=args.mesh_resolution,
                                        out_path=out_path)
        for row in result["rows"]:
            print(f"{row['variant']}: Q={row['quantile']} Qbar={row['superquantile']} "
                  f"diff={row['pct_diff']}%")
        return 0

    # remark4
    out_path = args.out or "remark4.csv"
    rows = remark4_study(m=args.samples, seed=args.seed, step=args.step,
                         out_path=out_path)
    print(f"wrote {len(rows)} grid points to {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
