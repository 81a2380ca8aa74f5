# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-user ranking kernels.

Mirrors ``creatorgame._kernels_py`` function for function. Rows are ranked
with a stable insertion sort (descending), which is the fast path for the
handful of creators a game has.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


cdef inline void _rank_row(const double[:, ::1] scores, Py_ssize_t u,
                           Py_ssize_t* order, double* s) noexcept nogil:
    cdef Py_ssize_t n = scores.shape[1]
    cdef Py_ssize_t k, j, idx
    cdef double v
    for k in range(n):
        v = scores[u, k]
        j = k
        while j > 0 and s[j - 1] < v:
            s[j] = s[j - 1]
            order[j] = order[j - 1]
            j -= 1
        s[j] = v
        order[j] = k


cdef inline double _antiderivative(double x, Py_ssize_t k,
                                   const double[::1] grid,
                                   const double[:, ::1] values,
                                   const double[:, ::1] cum) noexcept nogil:
    cdef Py_ssize_t p = values.shape[1]
    cdef Py_ssize_t j = 0
    # linear scan; grids have a few breakpoints
    while j < p - 1 and grid[j + 1] <= x:
        j += 1
    return cum[k, j] + values[k, j] * (x - grid[j])


def _cumulative(grid, values):
    widths = np.diff(grid)
    cum = np.zeros_like(values)
    if values.shape[1] > 1:
        cum[:, 1:] = np.cumsum(values[:, :-1] * widths[:-1], axis=1)
    return np.ascontiguousarray(cum)


def brm_rewards(scores, grid, values):
    cdef const double[:, ::1] S = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const double[::1] G = np.ascontiguousarray(grid, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] C = _cumulative(np.asarray(G), np.asarray(V))
    cdef Py_ssize_t m = S.shape[0], n = S.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] O = out
    order_buf = np.empty(n, dtype=np.intp)
    s_buf = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t[::1] order = order_buf
    cdef double[::1] s = s_buf
    cdef Py_ssize_t u, k
    cdef double acc
    with nogil:
        for u in range(m):
            _rank_row(S, u, &order[0], &s[0])
            s[n] = 0.0
            acc = 0.0
            for k in range(n - 1, -1, -1):
                if s[k] != s[k + 1]:
                    acc = acc + (_antiderivative(s[k], k, G, V, C)
                                 - _antiderivative(s[k + 1], k, G, V, C))
                O[u, order[k]] = acc
    return out


def brm_potential(scores, grid, values):
    cdef const double[:, ::1] S = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const double[::1] G = np.ascontiguousarray(grid, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] C = _cumulative(np.asarray(G), np.asarray(V))
    cdef Py_ssize_t m = S.shape[0], n = S.shape[1]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] O = out
    order_buf = np.empty(n, dtype=np.intp)
    s_buf = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] order = order_buf
    cdef double[::1] s = s_buf
    cdef Py_ssize_t u, k
    cdef double acc
    with nogil:
        for u in range(m):
            _rank_row(S, u, &order[0], &s[0])
            acc = 0.0
            for k in range(n):
                acc = acc + _antiderivative(s[k], k, G, V, C)
            O[u] = acc
    return out


def topk_softmax_rewards(scores, Py_ssize_t K, double beta, bint engagement):
    cdef const double[:, ::1] S = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t m = S.shape[0], n = S.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] O = out
    order_buf = np.empty(n, dtype=np.intp)
    s_buf = np.empty(n, dtype=np.float64)
    pos_buf = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] order = order_buf
    cdef double[::1] s = s_buf
    cdef double[::1] pos = pos_buf
    cdef Py_ssize_t u, k, start, j
    cdef double z, scale, total
    with nogil:
        for u in range(m):
            _rank_row(S, u, &order[0], &s[0])
            z = 0.0
            for k in range(n):
                if k < K:
                    pos[k] = exp((s[k] - s[0]) / beta)
                    z = z + pos[k]
                else:
                    pos[k] = 0.0
            scale = 1.0
            if engagement:
                scale = s[0] + beta * log(z)
            for k in range(K):
                pos[k] = pos[k] / z
                if engagement:
                    pos[k] = pos[k] * scale
            start = 0
            while start < n:
                j = start
                total = 0.0
                while j < n and s[j] == s[start]:
                    total = total + pos[j]
                    j += 1
                total = total / (j - start)
                for k in range(start, j):
                    O[u, order[k]] = total
                start = j
    return out


def ranked_weighted_sum(scores, r):
    cdef const double[:, ::1] S = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t m = S.shape[0], n = S.shape[1]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] O = out
    order_buf = np.empty(n, dtype=np.intp)
    s_buf = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] order = order_buf
    cdef double[::1] s = s_buf
    cdef Py_ssize_t u, k
    cdef double acc
    with nogil:
        for u in range(m):
            _rank_row(S, u, &order[0], &s[0])
            acc = 0.0
            for k in range(n):
                acc = acc + R[k] * s[k]
            O[u] = acc
    return out
