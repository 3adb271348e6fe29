# cython: language_level=3
"""Compiled scenario kernels.

Every reduction runs in a fixed sequential order so results are bit-reproducible
across runs and thread counts. Signatures mirror ``madrp._pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND = "cython"


def deviations(const double[:, ::1] D, const double[::1] x):
    cdef Py_ssize_t T = D.shape[0], n = D.shape[1], t, i
    cdef double acc
    out = np.empty(T, dtype=np.float64)
    cdef double[::1] d = out
    for t in range(T):
        acc = 0.0
        for i in range(n):
            acc += D[t, i] * x[i]
        d[t] = acc
    return out


def abs_sums(const double[::1] d):
    cdef Py_ssize_t t
    cdef double pos = 0.0, neg = 0.0, v
    for t in range(d.shape[0]):
        v = d[t]
        if v > 0.0:
            pos += v
        elif v < 0.0:
            neg -= v
    return pos, neg


def sign_select(const double[::1] d, double tie_abs, int rule):
    cdef Py_ssize_t T = d.shape[0], t
    cdef double tie_val
    s_arr = np.empty(T, dtype=np.float64)
    ties_arr = np.zeros(T, dtype=np.bool_)
    cdef double[::1] s = s_arr
    cdef cnp.npy_bool[::1] ties = ties_arr
    if rule == 1:
        tie_val = 1.0
    elif rule == 2:
        tie_val = -1.0
    else:
        tie_val = 0.0
    for t in range(T):
        if fabs(d[t]) <= tie_abs:
            s[t] = tie_val
            ties[t] = 1
        elif d[t] > 0.0:
            s[t] = 1.0
        else:
            s[t] = -1.0
    return s_arr, ties_arr


def signed_colmean(const double[:, ::1] D, const double[::1] s):
    cdef Py_ssize_t T = D.shape[0], n = D.shape[1], t, i
    cdef double st
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] g = out
    for t in range(T):
        st = s[t]
        if st == 0.0:
            continue
        for i in range(n):
            g[i] += st * D[t, i]
    for i in range(n):
        g[i] /= T
    return out


def drawdowns(const double[::1] wealth):
    cdef Py_ssize_t m = wealth.shape[0], t
    cdef double peak
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] dd = out
    if m == 0:
        return out
    peak = wealth[0]
    for t in range(m):
        if wealth[t] > peak:
            peak = wealth[t]
        dd[t] = (wealth[t] - peak) / peak
    return out


def worst_pair_product(const double[:, ::1] D):
    """Most negative (D[t,i] * D[t,j]) over t and i != j, with its location."""
    cdef Py_ssize_t T = D.shape[0], n = D.shape[1], t, i
    cdef double hi, lo, prod, best = 0.0
    cdef Py_ssize_t ihi, ilo, bt = -1, bi = -1, bj = -1
    for t in range(T):
        hi = 0.0
        lo = 0.0
        ihi = -1
        ilo = -1
        for i in range(n):
            if D[t, i] > hi:
                hi = D[t, i]
                ihi = i
            elif D[t, i] < lo:
                lo = D[t, i]
                ilo = i
        if ihi >= 0 and ilo >= 0:
            prod = hi * lo
            if bt < 0 or prod < best:
                best = prod
                bt = t
                bi = ihi
                bj = ilo
    return best, bt, bi, bj


def sign_consistent(const double[::1] d, const double[::1] s, double tol_abs):
    cdef Py_ssize_t t
    for t in range(d.shape[0]):
        if s[t] > 0.0:
            if d[t] < -tol_abs:
                return False
        elif s[t] < 0.0:
            if d[t] > tol_abs:
                return False
        elif fabs(d[t]) > tol_abs:
            return False
    return True
