import numpy as np
import pytest

from hpsplit.errors import InputError
from hpsplit.lp import (Constraint, LinearProgram, LPStatus, lasso_fit,
                        lasso_objective, least_squares, solve_lp)
from oracles import grid_search_min, lp_vertex_minimum

FREE = (-np.inf, np.inf)


def make_random_lp(rng):
    n = rng.integers(2, 7)
    m = rng.integers(1, 9)
    A = rng.normal(size=(m, n))
    b = rng.normal(scale=2.0, size=m)
    c = rng.normal(size=n)
    lo = rng.uniform(-3.0, -0.5, size=n)
    up = rng.uniform(0.5, 3.0, size=n)
    cons = [Constraint(A[i], "<=" if rng.random() < 0.7 else ">=", b[i])
            for i in range(m)]
    return LinearProgram(c, cons, list(zip(lo, up)))


class TestSolveLP:
    def test_single_variable_max_of_bounds(self):
        lp = LinearProgram([1.0],
                           [Constraint([1.0], ">=", 3), Constraint([1.0], ">=", 5)],
                           [FREE])
        sol = solve_lp(lp)
        assert sol.status is LPStatus.OPTIMAL
        assert sol.values[0] == pytest.approx(5.0, abs=1e-9)
        assert sol.objective_value == pytest.approx(5.0, abs=1e-9)

    def test_unbounded_ray(self):
        lp = LinearProgram([-1.0], [], [(0.0, np.inf)])
        assert solve_lp(lp).status is LPStatus.UNBOUNDED

    def test_infeasible(self):
        lp = LinearProgram([1.0],
                           [Constraint([1.0], "<=", 1), Constraint([1.0], ">=", 2)],
                           [FREE])
        assert solve_lp(lp).status is LPStatus.INFEASIBLE

    def test_equality_constraints(self):
        # min x+y st x+y = 2, x-y <= 0, x,y >= 0
        lp = LinearProgram([1.0, 1.0],
                           [Constraint([1, 1], "=", 2), Constraint([1, -1], "<=", 0)])
        sol = solve_lp(lp)
        assert sol.status is LPStatus.OPTIMAL
        assert sol.objective_value == pytest.approx(2.0, abs=1e-9)
        assert sol.values.sum() == pytest.approx(2.0, abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InputError):
            LinearProgram([1.0, 2.0], [Constraint([1.0], "<=", 1)])

    def test_bad_bounds_rejected(self):
        with pytest.raises(InputError):
            LinearProgram([1.0], [], [(2.0, 1.0)])

    def test_matches_vertex_enumeration_on_random_lps(self):
        rng = np.random.default_rng(20240817)
        solved = 0
        for _ in range(200):
            lp = make_random_lp(rng)
            oracle = lp_vertex_minimum(lp)
            sol = solve_lp(lp)
            if oracle is None:
                assert sol.status is LPStatus.INFEASIBLE
            else:
                assert sol.status is LPStatus.OPTIMAL
                assert sol.objective_value == pytest.approx(oracle, abs=1e-6)
                solved += 1
        assert solved > 100  # generator must mostly produce feasible instances

    def test_optimal_solution_is_feasible(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            lp = make_random_lp(rng)
            sol = solve_lp(lp)
            if sol.status is not LPStatus.OPTIMAL:
                continue
            for con in lp.constraints:
                lhs = float(con.coeffs @ sol.values)
                if con.relation == "<=":
                    assert lhs <= con.rhs + 1e-7
                elif con.relation == ">=":
                    assert lhs >= con.rhs - 1e-7
                else:
                    assert lhs == pytest.approx(con.rhs, abs=1e-7)
            assert sol.objective_value == pytest.approx(
                float(lp.objective @ sol.values), abs=1e-7)

    def test_deterministic_resolve(self):
        rng = np.random.default_rng(99)
        lp = make_random_lp(rng)
        s1, s2 = solve_lp(lp), solve_lp(lp)
        assert s1.status == s2.status
        if s1.status is LPStatus.OPTIMAL:
            assert np.array_equal(s1.values, s2.values)

    def test_local_optimality_spot_check(self):
        rng = np.random.default_rng(4242)
        checked = 0
        for _ in range(30):
            lp = make_random_lp(rng)
            sol = solve_lp(lp)
            if sol.status is not LPStatus.OPTIMAL:
                continue
            checked += 1
            for j in range(lp.num_vars):
                for step in (1e-3, -1e-3):
                    x = sol.values.copy()
                    x[j] += step
                    if _violates(lp, x):
                        continue
                    assert float(lp.objective @ x) >= sol.objective_value - 1e-6
        assert checked >= 10


def _violates(lp, x, tol=1e-9):
    for con in lp.constraints:
        lhs = float(con.coeffs @ x)
        if con.relation == "<=" and lhs > con.rhs + tol:
            return True
        if con.relation == ">=" and lhs < con.rhs - tol:
            return True
        if con.relation == "=" and abs(lhs - con.rhs) > tol:
            return True
    for j, (lo, up) in enumerate(lp.bounds):
        if x[j] < lo - tol or x[j] > up + tol:
            return True
    return False


class TestLeastSquares:
    def test_exact_line(self):
        w, b = least_squares(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        assert w[0] == pytest.approx(1.0, abs=1e-10)
        assert b == pytest.approx(0.0, abs=1e-10)

    def test_constant_target(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 3))
        w, b = least_squares(X, np.full(20, 4.5))
        assert np.allclose(w, 0.0, atol=1e-9)
        assert b == pytest.approx(4.5, abs=1e-9)

    def test_plant_and_recover(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(5, 3))
        w_true = np.array([0.5, -1.25, 2.0])
        y = X @ w_true + 0.75
        w, b = least_squares(X, y)
        assert np.allclose(w, w_true, atol=1e-8)
        assert b == pytest.approx(0.75, abs=1e-8)

    def test_empty_input_rejected(self):
        with pytest.raises(InputError):
            least_squares(np.zeros((0, 2)), np.zeros(0))

    def test_residual_orthogonal_to_columns(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        w, b = least_squares(X, y)
        resid = y - X @ w - b
        A = np.hstack([X, np.ones((30, 1))])
        assert np.abs(A.T @ resid).max() < 1e-7

    def test_rank_deficient_minimum_norm(self):
        # duplicated column: lstsq must split the weight evenly
        x = np.linspace(0, 1, 10)
        X = np.column_stack([x, x])
        y = 2 * x
        w, b = least_squares(X, y)
        assert np.allclose(w, [1.0, 1.0], atol=1e-8)
        assert b == pytest.approx(0.0, abs=1e-8)


class TestLassoFit:
    def test_zero_penalty_matches_least_squares(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(25, 3))
        y = X @ np.array([1.0, -0.5, 0.25]) + 0.1 + rng.normal(scale=0.05, size=25)
        w_ls, b_ls = least_squares(X, y)
        w, b = lasso_fit(X, y, 0.0)
        assert np.allclose(w, w_ls, atol=1e-6)
        assert b == pytest.approx(b_ls, abs=1e-6)

    def test_exact_line_zero_penalty(self):
        w, b = lasso_fit(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), 0.0)
        assert w[0] == pytest.approx(1.0, abs=1e-6)
        assert b == pytest.approx(0.0, abs=1e-6)

    def test_huge_penalty_kills_everything(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(size=(12, 2))
        y = rng.uniform(size=12)
        lam = float(np.abs(X.T @ y).max()) / 12 + np.abs(y).mean() + 1.0
        w, b = lasso_fit(X, y, lam)
        assert np.allclose(w, 0.0)
        assert b == 0.0

    def test_matches_grid_search_oracle(self):
        X = np.array([[0.0, 1.0], [0.25, 0.5], [0.75, 0.25], [1.0, 0.0]])
        y = np.array([0.1, 0.35, 0.6, 0.9])
        lam = 0.1
        w, b = lasso_fit(X, y, lam)
        ours = lasso_objective(X, y, w, b, lam)
        axes = [np.linspace(-1.0, 1.5, 51)] * 3
        oracle, _ = grid_search_min(
            lambda p: lasso_objective(X, y, p[:2], p[2], lam), axes)
        assert ours <= oracle + 1e-4

    def test_objective_monotone_over_sweeps(self):
        from hpsplit._kernels import _fallback
        rng = np.random.default_rng(8)
        X = np.ascontiguousarray(rng.uniform(size=(15, 4)))
        y = np.ascontiguousarray(rng.uniform(size=15))
        lam = 0.05
        prev = np.inf
        for sweeps in range(1, 8):
            w, b, _, _ = _fallback.lasso_sweeps(X, y, lam, 0.0, sweeps)
            obj = lasso_objective(X, y, w, b, lam)
            assert obj <= prev + 1e-12
            prev = obj

    def test_negative_penalty_rejected(self):
        with pytest.raises(InputError):
            lasso_fit(np.ones((2, 1)), np.ones(2), -0.1)
