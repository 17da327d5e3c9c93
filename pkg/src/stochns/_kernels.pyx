# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Inputs are float64, C-contiguous, viewed as 3-D."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, floor

cnp.import_array()


cdef inline double ipow(double x, int n) noexcept nogil:
    cdef double r = 1.0
    while n > 0:
        if n & 1:
            r *= x
        x *= x
        n >>= 1
    return r


cdef inline int as_int(double e) noexcept nogil:
    # exponent as a small nonnegative integer, or -1
    if e >= 0.0 and e <= 64.0 and floor(e) == e:
        return <int>e
    return -1


def power_sum(double[:, :, :, ::1] data, double p):
    """Sum over points of (sum over components of data**2) ** (p/2)."""
    cdef Py_ssize_t c, i, n
    cdef Py_ssize_t nc = data.shape[0]
    n = data.shape[1] * data.shape[2] * data.shape[3]
    cdef double[:, ::1] flat = np.asarray(data).reshape(nc, n)
    cdef double[::1] sq = np.zeros(n)
    cdef double half = 0.5 * p
    cdef int ih = as_int(half)
    cdef double v, total = 0.0
    with nogil:
        for c in range(nc):
            for i in range(n):
                v = flat[c, i]
                sq[i] += v * v
        if ih >= 0:
            for i in range(n):
                total += ipow(sq[i], ih)
        else:
            for i in range(n):
                if sq[i] > 0.0:
                    total += pow(sq[i], half)
    return total


cdef void _abs_pow(double[:, :, ::1] a, double[:, :, ::1] w, double e) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef int ie = as_int(e)
    cdef double x
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                x = fabs(a[i, j, k])
                if ie >= 0:
                    w[i, j, k] = ipow(x, ie)
                else:
                    w[i, j, k] = pow(x, e)


def fd_grad_power_energy(double[:, :, ::1] a, double exponent, double[::1] spacing,
                         int ndim, double[::1] coef):
    """Sum over points of |D(|a|**exponent)|**2 with a centered periodic stencil."""
    cdef Py_ssize_t n0 = a.shape[0], n1 = a.shape[1], n2 = a.shape[2]
    cdef Py_ssize_t half = coef.shape[0]
    cdef Py_ssize_t i, j, k, s
    cdef double d, total = 0.0, inv
    cdef double[:, :, ::1] w = np.empty((n0, n1, n2))
    # wrapped neighbour tables, row s-1 holds index+s and index-s
    cdef Py_ssize_t[:, ::1] p0 = np.empty((half, n0), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] m0 = np.empty((half, n0), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] p1 = np.empty((half, n1), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] m1 = np.empty((half, n1), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] p2 = np.empty((half, n2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] m2 = np.empty((half, n2), dtype=np.intp)
    for s in range(half):
        for i in range(n0):
            p0[s, i] = (i + s + 1) % n0
            m0[s, i] = (i - s - 1 + half * n0) % n0
        for i in range(n1):
            p1[s, i] = (i + s + 1) % n1
            m1[s, i] = (i - s - 1 + half * n1) % n1
        for i in range(n2):
            p2[s, i] = (i + s + 1) % n2
            m2[s, i] = (i - s - 1 + half * n2) % n2
    with nogil:
        _abs_pow(a, w, exponent)
        inv = 1.0 / spacing[0]
        for i in range(n0):
            for j in range(n1):
                for k in range(n2):
                    d = 0.0
                    for s in range(half):
                        d += coef[s] * (w[p0[s, i], j, k] - w[m0[s, i], j, k])
                    d *= inv
                    total += d * d
        if ndim > 1:
            inv = 1.0 / spacing[1]
            for i in range(n0):
                for j in range(n1):
                    for k in range(n2):
                        d = 0.0
                        for s in range(half):
                            d += coef[s] * (w[i, p1[s, j], k] - w[i, m1[s, j], k])
                        d *= inv
                        total += d * d
        if ndim > 2:
            inv = 1.0 / spacing[2]
            for i in range(n0):
                for j in range(n1):
                    for k in range(n2):
                        d = 0.0
                        for s in range(half):
                            d += coef[s] * (w[i, j, p2[s, k]] - w[i, j, m2[s, k]])
                        d *= inv
                        total += d * d
    return total


def periodic_convolve(double[:, :, ::1] f, double[:, :, ::1] kernel, double weight):
    """out[x] = weight * sum_y kernel[x - y] f[y], indices taken modulo the shape."""
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t x0, x1, x2, y0, y1, y2, k0, k1
    cdef double acc
    out_arr = np.zeros((n0, n1, n2))
    cdef double[:, :, ::1] out = out_arr
    # flipped, doubled kernel so kernel[(x - y) mod n] is a contiguous slice
    cdef double[:, :, ::1] kk = np.tile(np.ascontiguousarray(kernel), (2, 2, 2))
    with nogil:
        for x0 in range(n0):
            for x1 in range(n1):
                for x2 in range(n2):
                    acc = 0.0
                    for y0 in range(n0):
                        k0 = x0 - y0 + n0
                        for y1 in range(n1):
                            k1 = x1 - y1 + n1
                            for y2 in range(n2):
                                acc += kk[k0, k1, x2 - y2 + n2] * f[y0, y1, y2]
                    out[x0, x1, x2] = weight * acc
    return out_arr
