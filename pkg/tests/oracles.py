"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's own solution paths: the LP oracle
enumerates basic feasible vertices, the lasso/adjustive oracles scan grids.
"""
from itertools import combinations

import numpy as np

from hpsplit.lp import GE, LE


def lp_vertex_minimum(problem, feas_tol=1e-9):
    """Minimum objective over all basic feasible vertices, or None if none.

    Collects every constraint and finite bound as a hyperplane, solves all
    n-subsets, and keeps the feasible intersection points.  Only valid for
    problems whose feasible region is bounded (e.g. a finite box), where a
    nonempty region always contains a vertex.
    """
    n = problem.num_vars
    rows, rhs = [], []
    for con in problem.constraints:
        rows.append(con.coeffs)
        rhs.append(con.rhs)
    for j, (lo, up) in enumerate(problem.bounds):
        if np.isfinite(lo):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rhs.append(lo)
        if np.isfinite(up):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rhs.append(up)
    A = np.array(rows)
    b = np.array(rhs)
    scale = np.maximum(np.abs(A).max(axis=1), 1e-12)
    A_n = A / scale[:, None]
    b_n = b / scale

    combos = np.array(list(combinations(range(len(rows)), n)))
    mats = A_n[combos]
    vecs = b_n[combos]
    dets = np.abs(np.linalg.det(mats))
    ok = dets > 1e-10
    if not ok.any():
        return None
    cand = np.linalg.solve(mats[ok], vecs[ok][:, :, None])[:, :, 0]

    feas = np.ones(len(cand), dtype=bool)
    for con in problem.constraints:
        lhs = cand @ con.coeffs
        if con.relation == LE:
            feas &= lhs <= con.rhs + feas_tol
        elif con.relation == GE:
            feas &= lhs >= con.rhs - feas_tol
        else:
            feas &= np.abs(lhs - con.rhs) <= feas_tol
    for j, (lo, up) in enumerate(problem.bounds):
        if np.isfinite(lo):
            feas &= cand[:, j] >= lo - feas_tol
        if np.isfinite(up):
            feas &= cand[:, j] <= up + feas_tol
    if not feas.any():
        return None
    return float((cand[feas] @ problem.objective).min())


def grid_search_min(objective, axes):
    """Exhaustive minimum of ``objective`` over the cartesian grid ``axes``.

    Evaluates point by point; used at small sizes only.
    """
    best = np.inf
    best_point = None
    grids = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=-1)
    for point in flat:
        val = objective(point)
        if val < best:
            best = val
            best_point = point
    return best, best_point
