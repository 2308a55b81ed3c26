"""Dense linear programming and least-squares substrate.

Provides a two-phase dense simplex solver with Bland's rule (deterministic,
cycle-free), ordinary least squares with a minimum-norm guarantee, and
L1-penalized least squares by cyclic coordinate descent.  The simplex pivot
loop and the coordinate-descent sweep run on the compiled kernel when it is
available (see ``hpsplit._kernels``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from hpsplit import _kernels
from hpsplit.errors import InputError, SolverFailure

LE, GE, EQ = "<=", ">=", "="

FEAS_TOL = 1e-7      # phase-1 optimum above this means infeasible
RC_TOL = 1e-9        # reduced-cost threshold for optimality
PIVOT_TOL = 1e-9     # smallest usable pivot element
ITER_FACTOR = 50     # iteration cap = ITER_FACTOR * (num_vars + num_constraints)

LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class Constraint:
    coeffs: np.ndarray
    relation: str          # one of "<=", ">=", "="
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "rhs", float(self.rhs))
        if self.relation not in (LE, GE, EQ):
            raise InputError(f"unknown constraint relation {self.relation!r}")


@dataclass(frozen=True)
class LinearProgram:
    """minimize ``objective . z`` subject to constraints and variable bounds."""

    objective: np.ndarray
    constraints: list[Constraint] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None   # per-variable (lo, up)

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float)
        object.__setattr__(self, "objective", obj)
        n = obj.size
        for k, con in enumerate(self.constraints):
            if con.coeffs.size != n:
                raise InputError(
                    f"constraint {k} has {con.coeffs.size} coefficients, expected {n}")
        if self.bounds is None:
            object.__setattr__(self, "bounds", [(0.0, np.inf)] * n)
        else:
            if len(self.bounds) != n:
                raise InputError(f"{len(self.bounds)} bounds for {n} variables")
            for k, (lo, up) in enumerate(self.bounds):
                if lo > up:
                    raise InputError(f"variable {k} has lower bound {lo} > upper bound {up}")

    @property
    def num_vars(self) -> int:
        return int(self.objective.size)


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    values: np.ndarray | None = None
    objective_value: float | None = None


def solve_lp(problem: LinearProgram) -> LPSolution:
    """Solve ``problem`` with a two-phase dense simplex under Bland's rule.

    Returns an optimal vertex, or the Infeasible/Unbounded classification.
    Raises SolverFailure if the pivot cap (50 * (vars + constraints) per
    phase) is exhausted, which is distinct from infeasibility.
    """
    n = problem.num_vars
    if n == 0:
        raise InputError("linear program has no variables")
    std = _Standardized(problem)
    max_iter = ITER_FACTOR * (n + len(problem.constraints) + 1)

    T, basis, n_struct, n_slack, n_art = std.tableau()
    m = len(basis)
    total_cols = n_struct + n_slack + n_art

    if n_art > 0:
        status, _ = _kernels.simplex_iterate(
            T, basis, m, m + 1, total_cols, RC_TOL, PIVOT_TOL, max_iter)
        if status == _kernels.ITERATION_CAP:
            raise SolverFailure("simplex iteration cap exceeded in phase 1")
        phase1_value = -T[m + 1, -1]
        if phase1_value > FEAS_TOL:
            return LPSolution(LPStatus.INFEASIBLE)
        T, basis, m = _purge_artificials(T, basis, m, n_struct + n_slack)

    status, _ = _kernels.simplex_iterate(
        T, basis, m, m, n_struct + n_slack, RC_TOL, PIVOT_TOL, max_iter)
    if status == _kernels.ITERATION_CAP:
        raise SolverFailure("simplex iteration cap exceeded in phase 2")
    if status == _kernels.UNBOUNDED:
        return LPSolution(LPStatus.UNBOUNDED)

    u = np.zeros(n_struct + n_slack + 1)  # +1 pad: purged tableaus keep columns
    for i in range(m):
        if basis[i] < u.size:
            u[basis[i]] = T[i, -1]
    values = std.recover(u[:n_struct])
    return LPSolution(LPStatus.OPTIMAL, values, float(problem.objective @ values))


class _Standardized:
    """Rewrites an LP over bounded/free variables as min c.u, A u rel b, u >= 0.

    Finite lower bounds are shifted out, upper-bounded-only variables are
    negated, free variables are split into a difference of two nonnegatives.
    Two-sided bounds contribute an extra <= row for the width.
    """

    def __init__(self, problem: LinearProgram):
        self.problem = problem
        # per original variable: (kind, column(s), shift)
        self.var_map: list[tuple[str, int, int, float]] = []
        cols = 0
        extra_rows: list[tuple[int, float]] = []   # (column, width) for u <= width
        for j, (lo, up) in enumerate(problem.bounds):
            if np.isfinite(lo):
                self.var_map.append(("shift", cols, -1, lo))
                if np.isfinite(up):
                    extra_rows.append((cols, up - lo))
                cols += 1
            elif np.isfinite(up):
                self.var_map.append(("neg", cols, -1, up))
                cols += 1
            else:
                self.var_map.append(("free", cols, cols + 1, 0.0))
                cols += 2
        self.n_struct = cols
        self.extra_rows = extra_rows

    def _expand(self, coeffs: np.ndarray) -> tuple[np.ndarray, float]:
        """Row of u-coefficients plus the constant absorbed by shifts."""
        row = np.zeros(self.n_struct)
        const = 0.0
        for j, (kind, c1, c2, shift) in enumerate(self.var_map):
            a = coeffs[j]
            if a == 0.0:
                continue
            if kind == "shift":
                row[c1] += a
                const += a * shift
            elif kind == "neg":
                row[c1] -= a
                const += a * shift
            else:
                row[c1] += a
                row[c2] -= a
        return row, const

    def recover(self, u: np.ndarray) -> np.ndarray:
        z = np.zeros(self.problem.num_vars)
        for j, (kind, c1, c2, shift) in enumerate(self.var_map):
            if kind == "shift":
                z[j] = shift + u[c1]
            elif kind == "neg":
                z[j] = shift - u[c1]
            else:
                z[j] = u[c1] - u[c2]
        return z

    def tableau(self):
        prob = self.problem
        rows: list[np.ndarray] = []
        rels: list[str] = []
        rhs: list[float] = []
        for con in prob.constraints:
            row, const = self._expand(con.coeffs)
            rows.append(row)
            rels.append(con.relation)
            rhs.append(con.rhs - const)
        for col, width in self.extra_rows:
            row = np.zeros(self.n_struct)
            row[col] = 1.0
            rows.append(row)
            rels.append(LE)
            rhs.append(width)

        m = len(rows)
        n_struct = self.n_struct
        c_u, _ = self._expand(prob.objective)

        # orient every row to a nonnegative rhs
        A = np.array(rows) if rows else np.zeros((0, n_struct))
        b = np.array(rhs)
        for i in range(m):
            if b[i] < 0.0:
                A[i] = -A[i]
                b[i] = -b[i]
                rels[i] = {LE: GE, GE: LE, EQ: EQ}[rels[i]]

        n_slack = sum(1 for r in rels if r != EQ)
        n_art = sum(1 for r in rels if r != LE)
        total = n_struct + n_slack + n_art
        # rows 0..m-1 constraints, row m phase-2 costs, row m+1 phase-1 costs
        T = np.zeros((m + 2, total + 1))
        basis = np.zeros(m, dtype=np.int64)
        T[:m, :n_struct] = A
        T[:m, -1] = b
        si = n_struct
        ai = n_struct + n_slack
        art_rows = []
        for i in range(m):
            if rels[i] == LE:
                T[i, si] = 1.0
                basis[i] = si
                si += 1
            elif rels[i] == GE:
                T[i, si] = -1.0
                si += 1
                T[i, ai] = 1.0
                basis[i] = ai
                art_rows.append(i)
                ai += 1
            else:
                T[i, ai] = 1.0
                basis[i] = ai
                art_rows.append(i)
                ai += 1
        T[m, :n_struct] = c_u
        if art_rows:
            # price out the artificial basis: cbar_j = c_j - sum of their rows
            T[m + 1, :] = -T[art_rows, :].sum(axis=0)
            T[m + 1, n_struct + n_slack:total] += 1.0
        return T, basis, n_struct, n_slack, n_art


def _purge_artificials(T, basis, m, n_real):
    """Pivot zero-valued artificials out of the basis; drop redundant rows."""
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] < n_real:
            continue
        piv_col = -1
        for j in range(n_real):
            if abs(T[i, j]) > PIVOT_TOL:
                piv_col = j
                break
        if piv_col >= 0:
            # rhs is zero here, so pivoting on any nonzero entry keeps b unchanged
            _manual_pivot(T, basis, i, piv_col)
        else:
            keep[i] = False   # all-zero row over real columns: redundant
    if keep.all():
        return T, basis, m
    rows = np.concatenate([np.nonzero(keep)[0], [m, m + 1]])
    return np.ascontiguousarray(T[rows]), basis[keep].copy(), int(keep.sum())


def _manual_pivot(T, basis, r, j):
    T[r, :] /= T[r, j]
    factor = T[:, j].copy()
    factor[r] = 0.0
    T -= factor[:, None] * T[r, :]
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def least_squares(X, y) -> tuple[np.ndarray, float]:
    """Weights and intercept minimizing the sum of squared residuals.

    Rank-deficient inputs get the minimum-norm solution (orthogonal
    factorization via lstsq, with ridge damping 1e-10 as a fallback).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise InputError("least_squares needs a 2-D X and matching 1-D y")
    if y.size == 0:
        raise InputError("least_squares called on an empty data set")
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    try:
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    except np.linalg.LinAlgError:
        G = A.T @ A + 1e-10 * np.eye(A.shape[1])
        coef = np.linalg.solve(G, A.T @ y)
    return coef[:-1], float(coef[-1])


def lasso_fit(X, y, lam: float) -> tuple[np.ndarray, float]:
    """L1-penalized least squares: (1/(2n)) Err + lam * (sum|w| + |b|).

    The intercept is penalized together with the weights.  Cyclic coordinate
    descent over w then b; converged when the largest coordinate change in a
    sweep drops below 1e-8.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise InputError("lasso_fit needs a 2-D X and matching 1-D y")
    if y.size == 0:
        raise InputError("lasso_fit called on an empty data set")
    if lam < 0:
        raise InputError(f"penalty must be nonnegative, got {lam}")
    w, b, _, converged = _kernels.lasso_sweeps(X, y, float(lam), LASSO_TOL, LASSO_MAX_SWEEPS)
    if not converged:
        raise SolverFailure(f"coordinate descent did not converge in {LASSO_MAX_SWEEPS} sweeps")
    return np.asarray(w), float(b)


def lasso_objective(X, y, w, b, lam: float) -> float:
    """The value lasso_fit minimizes; shared by tests and the grid oracle."""
    resid = y - X @ w - b
    return float(resid @ resid) / (2 * y.size) + lam * (np.abs(w).sum() + abs(b))
