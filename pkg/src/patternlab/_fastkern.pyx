# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pool-adjacent-violators for the nonincreasing cone."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _pava_row(const double[::1] z, double[::1] out,
                    double[::1] means, Py_ssize_t[::1] counts) noexcept nogil:
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t top = -1
    cdef Py_ssize_t i, b, pos
    cdef double c
    for i in range(n):
        top += 1
        means[top] = z[i]
        counts[top] = 1
        while top > 0 and means[top] >= means[top - 1]:
            c = counts[top - 1] + counts[top]
            means[top - 1] = (means[top - 1] * counts[top - 1]
                              + means[top] * counts[top]) / c
            counts[top - 1] = counts[top - 1] + counts[top]
            top -= 1
    pos = 0
    for b in range(top + 1):
        for i in range(counts[b]):
            out[pos + i] = means[b]
        pos += counts[b]


def pava_decreasing(z):
    """Project a 1-d array onto the nonincreasing cone."""
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0]
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    cdef double[::1] ov = out
    cdef double[::1] means = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] counts = np.empty(n, dtype=np.intp)
    _pava_row(zv, ov, means, counts)
    return out


def pava_decreasing_batch(Z):
    """Row-wise nonincreasing projection of an (N, p) array."""
    cdef double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef Py_ssize_t N = Zv.shape[0]
    cdef Py_ssize_t p = Zv.shape[1]
    out = np.empty((N, p), dtype=np.float64)
    if N == 0 or p == 0:
        return out
    cdef double[:, ::1] Ov = out
    cdef double[::1] means = np.empty(p, dtype=np.float64)
    cdef Py_ssize_t[::1] counts = np.empty(p, dtype=np.intp)
    cdef Py_ssize_t n
    for n in range(N):
        _pava_row(Zv[n], Ov[n], means, counts)
    return out
