# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recursion kernels for trajectory simulation and filtering.

These loops are the runtime hot spot of Monte Carlo sweeps: a strictly
sequential state recursion that numpy cannot vectorize over time.
"""
import numpy as np


def driven_recursion(double[:, ::1] a, double[:, ::1] b, double[:, ::1] u,
                     double[::1] x0):
    """Run x_{k+1} = a x_k + b u_k and return all states, x_0 included.

    a is (n, n), b is (n, d), u is (steps, d), x0 is (n,).
    Returns a (steps + 1, n) array.
    """
    cdef Py_ssize_t steps = u.shape[0]
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d = b.shape[1]
    out = np.empty((steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] x = out
    cdef Py_ssize_t k, i, j
    cdef double acc
    for i in range(n):
        x[0, i] = x0[i]
    for k in range(steps):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += a[i, j] * x[k, j]
            for j in range(d):
                acc += b[i, j] * u[k, j]
            x[k + 1, i] = acc
    return out


def filter_recursion(double[:, ::1] a, double[:, ::1] c, double[:, ::1] gain,
                     double[:, ::1] y, double[::1] x0):
    """Run the innovation filter on outputs y.

    e_k = y_k - c xhat_k, xhat_{k+1} = a xhat_k + gain e_k.
    Returns (e, xhat) with shapes (steps, m) and (steps + 1, n).
    """
    cdef Py_ssize_t steps = y.shape[0]
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = c.shape[0]
    e_out = np.empty((steps, m), dtype=np.float64)
    xh_out = np.empty((steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] e = e_out
    cdef double[:, ::1] xh = xh_out
    cdef Py_ssize_t k, i, j
    cdef double acc
    for i in range(n):
        xh[0, i] = x0[i]
    for k in range(steps):
        for i in range(m):
            acc = y[k, i]
            for j in range(n):
                acc -= c[i, j] * xh[k, j]
            e[k, i] = acc
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += a[i, j] * xh[k, j]
            for j in range(m):
                acc += gain[i, j] * e[k, j]
            xh[k + 1, i] = acc
    return e_out, xh_out
