# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: simplex pivoting and lasso coordinate descent.

Must stay semantically identical to ``_fallback.py``; pivot selection uses
exact float comparisons in both so the pivot sequences match.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_CAP = 2


def simplex_iterate(double[:, ::1] T, long long[::1] basis, Py_ssize_t m,
                    Py_ssize_t obj_row, Py_ssize_t eligible,
                    double tol_rc, double tol_piv, long long max_iter):
    cdef Py_ssize_t rows = T.shape[0]
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef Py_ssize_t i, j, r, c
    cdef long long it = 0
    cdef double piv, ratio, best, f

    while it < max_iter:
        j = -1
        for c in range(eligible):
            if T[obj_row, c] < -tol_rc:
                j = c
                break
        if j < 0:
            return OPTIMAL, it

        r = -1
        best = 0.0
        for i in range(m):
            piv = T[i, j]
            if piv > tol_piv:
                ratio = T[i, rhs] / piv
                if r < 0 or ratio < best:
                    r = i
                    best = ratio
                elif ratio == best and basis[i] < basis[r]:
                    r = i
        if r < 0:
            return UNBOUNDED, it

        piv = T[r, j]
        for c in range(rhs + 1):
            T[r, c] /= piv
        for i in range(rows):
            if i == r:
                continue
            f = T[i, j]
            if f != 0.0:
                for c in range(rhs + 1):
                    T[i, c] -= f * T[r, c]
        for i in range(rows):
            T[i, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j
        it += 1
    return ITERATION_CAP, it


def lasso_sweeps(const double[:, ::1] X, const double[::1] y, double lam,
                 double tol, long long max_sweeps):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.zeros(k)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r_arr = np.asarray(y, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sq_arr = np.zeros(k)
    cdef double[::1] w = w_arr
    cdef double[::1] r = r_arr
    cdef double[::1] sq = sq_arr
    cdef double b = 0.0
    cdef double delta, rho, new, s, diff
    cdef Py_ssize_t i, j
    cdef long long sweeps = 0

    for j in range(k):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        sq[j] = s

    while sweeps < max_sweeps:
        delta = 0.0
        for j in range(k):
            if sq[j] <= 0.0:
                continue
            rho = 0.0
            for i in range(n):
                rho += X[i, j] * r[i]
            rho += sq[j] * w[j]
            new = _soft(rho / n, lam) * (n / sq[j])
            if new != w[j]:
                diff = w[j] - new
                for i in range(n):
                    r[i] += X[i, j] * diff
                if new - w[j] > delta:
                    delta = new - w[j]
                elif w[j] - new > delta:
                    delta = w[j] - new
                w[j] = new
        rho = 0.0
        for i in range(n):
            rho += r[i]
        rho = rho / n + b
        new = _soft(rho, lam)
        if new != b:
            diff = b - new
            for i in range(n):
                r[i] += diff
            if new - b > delta:
                delta = new - b
            elif b - new > delta:
                delta = b - new
            b = new
        sweeps += 1
        if delta < tol:
            return w_arr, b, sweeps, True
    return w_arr, b, sweeps, False


cdef inline double _soft(double v, double t):
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0
