"""Pure-python (numpy) implementations of the hot kernels.

These mirror the compiled kernels in ``_speedups.pyx`` operation for
operation.  Pivot selection uses exact float comparisons in both backends so
the two produce the same pivot sequence on the same tableau.
"""
import numpy as np

# status codes shared with the compiled kernel
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_CAP = 2


def simplex_iterate(T, basis, m, obj_row, eligible, tol_rc, tol_piv, max_iter):
    """Run simplex pivots on tableau ``T`` in place until done.

    T         -- (rows x cols) tableau; rows [0, m) are constraints, the last
                 column is the rhs; row ``obj_row`` holds reduced costs.
                 Extra rows (e.g. a carried second objective) are updated by
                 the pivots like any other row.
    basis     -- length-m int array of basic column indices, updated in place.
    eligible  -- only columns [0, eligible) may enter the basis.

    Entering rule: lowest-index column with reduced cost < -tol_rc.
    Leaving rule: minimum ratio over pivots > tol_piv; ties broken by the
    smallest basic column index (Bland's rule, cycle-free).

    Returns (status, iterations).
    """
    rhs = T.shape[1] - 1
    it = 0
    while it < max_iter:
        red = T[obj_row, :eligible]
        neg = np.nonzero(red < -tol_rc)[0]
        if neg.size == 0:
            return OPTIMAL, it
        j = int(neg[0])

        col = T[:m, j]
        pos = np.nonzero(col > tol_piv)[0]
        if pos.size == 0:
            return UNBOUNDED, it
        ratios = T[pos, rhs] / col[pos]
        best = ratios.min()
        tied = pos[ratios == best]
        r = int(tied[np.argmin(basis[tied])])

        _pivot(T, basis, r, j)
        it += 1
    return ITERATION_CAP, it


def _pivot(T, basis, r, j):
    T[r, :] /= T[r, j]
    factor = T[:, j].copy()
    factor[r] = 0.0
    T -= factor[:, None] * T[r, :]
    # pin the pivot column exactly; both backends do this to avoid drift
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def lasso_sweeps(X, y, lam, tol, max_sweeps):
    """Cyclic coordinate descent for squared loss with an L1 penalty.

    Minimizes (1/(2n)) * sum((y - Xw - b)^2) + lam * (sum|w| + |b|).
    The intercept is penalized like any coordinate.  One sweep updates
    w[0], ..., w[K-1] and then b; stops when the largest coordinate change
    in a sweep is below ``tol``.

    Returns (w, b, sweeps, converged).
    """
    n, k = X.shape
    w = np.zeros(k)
    b = 0.0
    r = y.astype(float).copy()          # residual y - Xw - b
    sq = np.einsum("ij,ij->j", X, X)    # per-column squared norms
    sweeps = 0
    while sweeps < max_sweeps:
        delta = 0.0
        for j in range(k):
            if sq[j] <= 0.0:
                continue
            rho = X[:, j] @ r + sq[j] * w[j]
            new = _soft(rho / n, lam) * (n / sq[j])
            if new != w[j]:
                r += X[:, j] * (w[j] - new)
                delta = max(delta, abs(new - w[j]))
                w[j] = new
        rho_b = r.sum() / n + b
        new_b = _soft(rho_b, lam)
        if new_b != b:
            r += b - new_b
            delta = max(delta, abs(new_b - b))
            b = new_b
        sweeps += 1
        if delta < tol:
            return w, b, sweeps, True
    return w, b, sweeps, False


def _soft(v, t):
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0
