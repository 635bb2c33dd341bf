"""SAA problem builders and the LP expansion."""

import numpy as np
import pytest

from cribdo.risk import SampleSet, estimate_superquantile
from cribdo.saa import (
    InfeasibleBudgetError,
    LpTableau,
    SaaProblem,
    build_bpof_constrained,
    build_bpof_objective,
    build_superquantile_constrained,
    expand_to_lp,
)
from cribdo.solvers import solve_lp
from cribdo.stochastics import RandomBatch
from cribdo.problems import ShortColumnConvexModel


class AffineModel:
    """g = z - d, f = d on a box; affine in the design for every draw."""

    design_bounds = np.array([[0.0, 10.0]])
    is_convex = True

    def g_values(self, d, z):
        return np.atleast_2d(np.asarray(z, float))[:, 0] - float(d[0])

    def f_values(self, d, z):
        return np.full(np.atleast_2d(z).shape[0], float(d[0]))


def make_batch(m=40, seed=7):
    rng = np.random.default_rng(seed)
    return RandomBatch(draws=rng.normal(size=(m, 1)), seed=seed, stream_id=0)


class TestHingeBuilders:
    def test_constraint_minimum_is_superquantile_gap(self):
        # min over the anchor of the hinge constraint equals Qbar - t
        model, batch = AffineModel(), make_batch()
        alpha, t = 0.8, 0.5
        p = build_superquantile_constrained(model, batch, alpha, t)
        d = np.array([1.3])
        g = model.g_values(d, batch.draws)
        qbar = estimate_superquantile(SampleSet(g), alpha).value
        anchors = np.linspace(g.min() - 1, g.max() + 1, 4001)
        best = min(p.constraints[0](d, np.array([a])) for a in anchors)
        assert best == pytest.approx(qbar - t, abs=1e-6)

    def test_constraint_at_sample_quantile_anchor(self):
        model, batch = AffineModel(), make_batch()
        alpha, t = 0.9, 0.0
        p = build_superquantile_constrained(model, batch, alpha, t)
        d = np.array([0.7])
        g = SampleSet(model.g_values(d, batch.draws))
        est = estimate_superquantile(g, alpha)
        # evaluating the hinge form at the quantile anchor recovers Qbar
        assert p.constraints[0](d, np.array([est.aux])) == pytest.approx(
            est.value - t, abs=1e-12)

    def test_bpof_and_superquantile_share_feasible_set(self):
        model, batch = AffineModel(), make_batch()
        alpha, t = 0.85, 0.4
        p_sq = build_superquantile_constrained(model, batch, alpha, t)
        p_bp = build_bpof_constrained(model, batch, alpha, t)
        rng = np.random.default_rng(0)
        for _ in range(50):
            d = rng.uniform(0, 10, size=1)
            aux = rng.normal(size=1)
            assert p_sq.constraints[0](d, aux) == p_bp.constraints[0](d, aux)

    def test_bpof_anchor_bound_is_strictly_below_t(self):
        model, batch = AffineModel(), make_batch()
        p = build_bpof_constrained(model, batch, 0.9, 2.0)
        assert p.bounds[-1, 1] < 2.0

    def test_frozen_batch_reevaluation_is_bit_identical(self):
        model, batch = AffineModel(), make_batch()
        p = build_superquantile_constrained(model, batch, 0.9, 0.0)
        d, aux = np.array([2.0]), np.array([0.3])
        assert p.constraints[0](d, aux) == p.constraints[0](d, aux)

    def test_alpha_domain(self):
        model, batch = AffineModel(), make_batch()
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                build_superquantile_constrained(model, batch, bad, 0.0)

    def test_split(self):
        model, batch = AffineModel(), make_batch()
        p = build_superquantile_constrained(model, batch, 0.9, 0.0)
        d, aux = p.split(np.array([1.0, 2.0]))
        assert d.tolist() == [1.0]
        assert aux.tolist() == [2.0]


class TestMidpointConvexity:
    def test_short_column_constraint_convex_along_segments(self):
        # the declared-convex model's hinge constraint is midpoint convex
        model = ShortColumnConvexModel()
        batch = model.sample(200, seed=1)
        p = build_superquantile_constrained(model, batch, 0.9, 1.0)
        rng = np.random.default_rng(2)
        lo = np.concatenate([model.design_bounds[:, 0], [-1.0]])
        hi = np.concatenate([model.design_bounds[:, 1], [2.0]])
        h = lambda x: p.constraints[0](*p.split(x))
        for _ in range(1000):
            x = lo + rng.random(3) * (hi - lo)
            y = lo + rng.random(3) * (hi - lo)
            mid = h((x + y) / 2)
            assert mid <= (h(x) + h(y)) / 2 + 1e-9


class TestBpofObjective:
    def test_value_clamped_to_unit_interval(self):
        model, batch = AffineModel(), make_batch()
        p = build_bpof_objective(model, batch, t=0.0, c_t=20.0)
        d = np.array([0.0])
        for lam in (-50.0, -1.0, -0.01):
            v = p.objective(d, np.array([lam]))
            assert 0.0 <= v <= 1.0

    def test_budget_constraint_sign(self):
        model, batch = AffineModel(), make_batch()
        p = build_bpof_objective(model, batch, t=0.0, c_t=5.0)
        assert p.constraints[0](np.array([4.0]), np.zeros(1)) < 0
        assert p.constraints[0](np.array([6.0]), np.zeros(1)) > 0

    def test_impossible_budget_raises(self):
        model, batch = AffineModel(), make_batch()
        with pytest.raises(InfeasibleBudgetError):
            build_bpof_objective(model, batch, t=0.0, c_t=-1.0)


class TestLpExpansion:
    def test_lp_matches_analytic_optimum(self):
        # min d subject to Qbar_alpha(z - d) <= t has optimum d* = Qbar(z) - t
        model, batch = AffineModel(), make_batch(m=60, seed=3)
        alpha, t = 0.8, 0.5
        p = build_superquantile_constrained(model, batch, alpha, t)
        tab = expand_to_lp(p)
        sol = solve_lp(tab)
        qbar = estimate_superquantile(SampleSet(batch.draws[:, 0]), alpha).value
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(qbar - t, abs=1e-10)

    def test_lp_b_variables_are_hinge_values(self):
        model, batch = AffineModel(), make_batch(m=25, seed=4)
        p = build_superquantile_constrained(model, batch, 0.8, 0.0)
        tab = expand_to_lp(p)
        sol = solve_lp(tab)
        n = p.design_dim
        d, gamma = sol.x[:n], sol.x[n]
        b = sol.x[n + 1:]
        g = model.g_values(d, batch.draws)
        assert np.all(b >= -1e-12)
        assert np.all(b >= g - gamma - 1e-9)  # b_i dominates the hinge residual

    def test_lp_agrees_with_reference_solver(self):
        from scipy.optimize import linprog

        model, batch = AffineModel(), make_batch(m=35, seed=5)
        p = build_superquantile_constrained(model, batch, 0.75, 0.2)
        tab = expand_to_lp(p)
        ours = solve_lp(tab)
        ref = linprog(tab.c, A_ub=tab.a_ub, b_ub=tab.b_ub,
                      bounds=list(zip(tab.lo, tab.hi)), method="highs")
        assert ours.status == "optimal" and ref.status == 0
        assert ours.objective == pytest.approx(ref.fun + tab.c0, abs=1e-9)

    def test_nonaffine_model_rejected(self):
        model = ShortColumnConvexModel()
        batch = model.sample(20, seed=0)
        p = build_superquantile_constrained(model, batch, 0.9, 1.0)
        with pytest.raises(ValueError):
            expand_to_lp(p)

    def test_objective_forms_do_not_expand(self):
        model, batch = AffineModel(), make_batch()
        p = build_bpof_objective(model, batch, t=0.0, c_t=20.0)
        with pytest.raises(ValueError):
            expand_to_lp(p)


class TestLpTableauValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LpTableau(c=np.ones(2), a_ub=np.ones((1, 3)), b_ub=np.ones(1),
                      lo=np.zeros(2), hi=np.ones(2))

    def test_nonfinite_entries(self):
        with pytest.raises(ValueError):
            LpTableau(c=np.array([np.inf]), a_ub=np.ones((1, 1)),
                      b_ub=np.ones(1), lo=np.zeros(1), hi=np.ones(1))
