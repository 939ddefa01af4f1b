# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of `nonlocal_lwr._kernels_py` (same signatures, same math).

Build in place with `python3 setup.py build_ext --inplace`; the backend
selector falls back to the numpy implementation when this module is absent.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"


def conv_boundaries(const double[::1] rho, const double[::1] gamma):
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t k = gamma.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] w = out
    cdef cnp.ndarray[double, ndim=1] tail_arr = np.empty(k + 1, dtype=np.float64)
    cdef double[::1] tail = tail_arr
    cdef double last = rho[n - 1]
    cdef Py_ssize_t i, j, kmax
    cdef double acc
    # tail[j] = sum of gamma[j:] so the extrapolated cells fold into one term
    tail[k] = 0.0
    for j in range(k - 1, -1, -1):
        tail[j] = tail[j + 1] + gamma[j]
    cdef double a0, a1, a2, a3
    cdef Py_ssize_t j4
    for i in range(n + 1):
        kmax = k if n - i > k else n - i
        a0 = last * tail[kmax]
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        j4 = kmax - (kmax & 3)
        j = 0
        while j < j4:
            a0 += gamma[j] * rho[i + j]
            a1 += gamma[j + 1] * rho[i + j + 1]
            a2 += gamma[j + 2] * rho[i + j + 2]
            a3 += gamma[j + 3] * rho[i + j + 3]
            j += 4
        while j < kmax:
            a0 += gamma[j] * rho[i + j]
            j += 1
        w[i] = (a0 + a1) + (a2 + a3)
    return out


def upwind_step(const double[::1] rho, const double[::1] conv, const double[::1] v_bnd,
                double lam, double d=0.0):
    cdef Py_ssize_t n = rho.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j
    cdef double f_left, f_right, upv, lap
    f_left = v_bnd[0] * rho[0] * (1.0 - conv[0])
    for j in range(n):
        upv = rho[j]
        f_right = v_bnd[j + 1] * upv * (1.0 - conv[j + 1])
        out[j] = rho[j] - lam * (f_right - f_left)
        f_left = f_right
    if d != 0.0:
        for j in range(n):
            if j == 0:
                lap = rho[1] - rho[0]
            elif j == n - 1:
                lap = rho[n - 2] - rho[n - 1]
            else:
                lap = rho[j + 1] - 2.0 * rho[j] + rho[j - 1]
            out[j] += d * lap
    return out_arr


cdef inline double _demand(double r, double v) nogil:
    if r < 0.5:
        return v * r * (1.0 - r)
    return 0.25 * v


cdef inline double _supply(double r, double v) nogil:
    if r < 0.5:
        return 0.25 * v
    return v * r * (1.0 - r)


def godunov_step(const double[::1] rho, const double[::1] v_up, const double[::1] v_dn, double lam):
    cdef Py_ssize_t n = rho.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double f_left, f_right, dem, sup, up, dn
    f_left = min(_demand(rho[0], v_up[0]), _supply(rho[0], v_dn[0]))
    for i in range(n):
        up = rho[i]
        dn = rho[i + 1] if i + 1 < n else rho[n - 1]
        dem = _demand(up, v_up[i + 1])
        sup = _supply(dn, v_dn[i + 1])
        f_right = dem if dem < sup else sup
        out[i] = rho[i] - lam * (f_right - f_left)
        f_left = f_right
    return out_arr
