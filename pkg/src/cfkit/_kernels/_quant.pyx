# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-codeword search; mirrors _pyquant exactly.

Two passes: find the minimum squared distance, then take the
lexicographically smallest candidate within TIE_REL of it.  Same rounding
(half down) and tie rule as the numpy fallback, so both backends agree on
identical inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil

cnp.import_array()

DEF TIE_REL = 1e-12


cdef inline double _cand_coord(double xj, double sj, double gamma) nogil:
    return sj + gamma * ceil((xj - sj) / gamma - 0.5)


def nearest_codeword_point(object shifts_in, object x_in, double gamma):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] shifts = \
        np.ascontiguousarray(shifts_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] x = \
        np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t K = shifts.shape[0]
    cdef Py_ssize_t n = shifts.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] best = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] dists = np.empty(K, dtype=np.float64)
    cdef double best_d2 = -1.0
    cdef double d2, c, diff, tol
    cdef Py_ssize_t k, j
    cdef int have, lex

    for k in range(K):
        d2 = 0.0
        for j in range(n):
            c = _cand_coord(x[j], shifts[k, j], gamma)
            diff = c - x[j]
            d2 += diff * diff
        dists[k] = d2
        if best_d2 < 0.0 or d2 < best_d2:
            best_d2 = d2

    tol = TIE_REL * (gamma * gamma if gamma * gamma > 1.0 else 1.0)
    have = 0
    for k in range(K):
        if dists[k] > best_d2 + tol:
            continue
        if not have:
            for j in range(n):
                best[j] = _cand_coord(x[j], shifts[k, j], gamma)
            have = 1
            continue
        lex = 0
        for j in range(n):
            c = _cand_coord(x[j], shifts[k, j], gamma)
            if c < best[j]:
                lex = 1
                break
            elif c > best[j]:
                break
        if lex:
            for j in range(n):
                best[j] = _cand_coord(x[j], shifts[k, j], gamma)
    return best
