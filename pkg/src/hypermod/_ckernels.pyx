# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched geometry kernels.

Same contract as :mod:`hypermod._pykernels`: C-contiguous float64 inputs of a
common leading length, freshly allocated outputs.
"""

import numpy as np
from libc.math cimport sqrt, asinh, hypot, tanh, exp, cosh, sin, cos, fabs, log1p

BACKEND = "cython"


def euclid_dist(const double[:, ::1] P, const double[:, ::1] Q):
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1], i, k
    cdef double acc, diff
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        acc = 0.0
        for k in range(d):
            diff = Q[i, k] - P[i, k]
            acc += diff * diff
        o[i] = sqrt(acc)
    return out


def euclid_combine(const double[:, ::1] P, const double[:, ::1] Q, const double[::1] T):
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1], i, k
    out = np.empty((n, d))
    cdef double[:, ::1] o = out
    for i in range(n):
        for k in range(d):
            o[i, k] = P[i, k] + T[i] * (Q[i, k] - P[i, k])
    return out


def euclid_ray(const double[:, ::1] O, const double[:, ::1] U, const double[::1] D):
    cdef Py_ssize_t n = O.shape[0], d = O.shape[1], i, k
    out = np.empty((n, d))
    cdef double[:, ::1] o = out
    for i in range(n):
        for k in range(d):
            o[i, k] = O[i, k] + D[i] * U[i, k]
    return out


cdef inline double _hp_dist1(double x1, double y1, double x2, double y2) nogil:
    # asinh(u) = log1p(u + u^2 / (1 + sqrt(1 + u^2))), accurate for small u
    cdef double dx = x2 - x1, dy = y2 - y1
    cdef double u = sqrt(dx * dx + dy * dy) / (2.0 * sqrt(y1 * y2))
    cdef double u2 = u * u
    return 2.0 * log1p(u + u2 / (1.0 + sqrt(1.0 + u2)))


cdef inline void _hp_shoot(double x1, double y1, double er, double ei, double omr,
                           double a, double* x, double* y) nogil:
    cdef double tau = tanh(0.5 * a)
    cdef double one_minus_tau = 2.0 / (exp(a) + 1.0)
    cdef double omte = one_minus_tau + tau * omr
    cdef double ui = tau * ei
    cdef double den = omte * omte + ui * ui
    cdef double sech = 1.0 / cosh(0.5 * a)
    x[0] = x1 - 2.0 * y1 * ui / den
    y[0] = y1 * sech * sech / den


def hp_dist(const double[:, ::1] P, const double[:, ::1] Q):
    cdef Py_ssize_t n = P.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = _hp_dist1(P[i, 0], P[i, 1], Q[i, 0], Q[i, 1])
    return out


def hp_combine(const double[:, ::1] P, const double[:, ::1] Q, const double[::1] T):
    cdef Py_ssize_t n = P.shape[0], i
    cdef double x1, y1, x2, y2, t, dx, dy, D, re, im, nv, er, ei, omr, x, y
    out = np.empty((n, 2))
    cdef double[:, ::1] o = out
    for i in range(n):
        t = T[i]
        if t > 0.5:
            x1 = Q[i, 0]; y1 = Q[i, 1]; x2 = P[i, 0]; y2 = P[i, 1]; t = 1.0 - t
        else:
            x1 = P[i, 0]; y1 = P[i, 1]; x2 = Q[i, 0]; y2 = Q[i, 1]
        dx = x2 - x1
        dy = y2 - y1
        re = dx * dx + dy * (y1 + y2)
        im = -2.0 * y1 * dx
        nv = hypot(re, im)
        if nv == 0.0:
            o[i, 0] = x1
            o[i, 1] = y1
            continue
        D = _hp_dist1(x1, y1, x2, y2)
        er = re / nv
        ei = im / nv
        if re > 0.0:
            omr = im * im / (nv * (nv + re))
        else:
            omr = 1.0 - er
        _hp_shoot(x1, y1, er, ei, omr, t * D, &x, &y)
        o[i, 0] = x
        o[i, 1] = y
    return out


def hp_ray(const double[:, ::1] O, const double[::1] A, const double[::1] D):
    cdef Py_ssize_t n = O.shape[0], i
    cdef double sa, ca, omr, x, y
    out = np.empty((n, 2))
    cdef double[:, ::1] o = out
    for i in range(n):
        sa = sin(A[i])
        ca = cos(A[i])
        if sa > 0.0:
            omr = ca * ca / (1.0 + sa)
        else:
            omr = 1.0 - sa
        _hp_shoot(O[i, 0], O[i, 1], sa, -ca, omr, D[i], &x, &y)
        o[i, 0] = x
        o[i, 1] = y
    return out


cdef inline void _canon(double[:, ::1] o, Py_ssize_t i, double ray, double off) nogil:
    if off <= 0.0:
        o[i, 0] = 0.0
        o[i, 1] = 0.0
    else:
        o[i, 0] = ray
        o[i, 1] = off


def star_dist(const double[:, ::1] P, const double[:, ::1] Q):
    cdef Py_ssize_t n = P.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        if P[i, 0] == Q[i, 0]:
            o[i] = fabs(P[i, 1] - Q[i, 1])
        else:
            o[i] = P[i, 1] + Q[i, 1]
    return out


def star_combine(const double[:, ::1] P, const double[:, ::1] Q, const double[::1] T):
    cdef Py_ssize_t n = P.shape[0], i
    cdef double a, b, w
    out = np.empty((n, 2))
    cdef double[:, ::1] o = out
    for i in range(n):
        a = P[i, 1]
        b = Q[i, 1]
        if P[i, 0] == Q[i, 0]:
            _canon(o, i, P[i, 0], a + T[i] * (b - a))
        else:
            w = T[i] * (a + b)
            if w < a:
                _canon(o, i, P[i, 0], a - w)
            else:
                _canon(o, i, Q[i, 0], w - a)
    return out


def star_ray(const double[:, ::1] O, const double[::1] J, const double[::1] D):
    cdef Py_ssize_t n = O.shape[0], i
    cdef double r, a
    out = np.empty((n, 2))
    cdef double[:, ::1] o = out
    for i in range(n):
        r = O[i, 0]
        a = O[i, 1]
        if a == 0.0:
            _canon(o, i, J[i], D[i])
        elif r == J[i]:
            _canon(o, i, r, a + D[i])
        elif D[i] < a:
            _canon(o, i, r, a - D[i])
        else:
            _canon(o, i, J[i], D[i] - a)
    return out
