# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel core; signatures and semantics mirror kernels.pure.

Reductions accumulate in double for both float32 and float64 inputs, and
the row loops fuse the passes numpy would spread over temporaries.
"""

import numpy as np

cimport cython
from libc.math cimport erf, exp, sqrt

ctypedef fused real:
    float
    double

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327

name = "compiled"


cdef inline object _empty(Py_ssize_t r, Py_ssize_t c, bint single):
    if single:
        return np.empty((r, c), dtype=np.float32)
    return np.empty((r, c), dtype=np.float64)


def rope_rotate(const real[:, ::1] x, const real[:, ::1] cos_t, const real[:, ::1] sin_t, bint inverse=False):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t p = cos_t.shape[1]
    out_np = _empty(n, 2 * p, real is float)
    cdef real[:, ::1] out = out_np
    cdef Py_ssize_t i, j
    cdef real a, b, c, s
    with nogil:
        for i in range(n):
            for j in range(p):
                a = x[i, 2 * j]
                b = x[i, 2 * j + 1]
                c = cos_t[i, j]
                s = -sin_t[i, j] if inverse else sin_t[i, j]
                out[i, 2 * j] = a * c - b * s
                out[i, 2 * j + 1] = a * s + b * c
    return out_np


def softmax_rows(const real[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t c = z.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] out = out_np
    cdef Py_ssize_t i, j
    cdef double m, acc, inv
    with nogil:
        for i in range(n):
            m = z[i, 0]
            for j in range(1, c):
                if z[i, j] > m:
                    m = z[i, j]
            acc = 0.0
            for j in range(c):
                out[i, j] = <real> exp(<double> z[i, j] - m)
                acc += out[i, j]
            inv = 1.0 / acc
            for j in range(c):
                out[i, j] = <real> (out[i, j] * inv)
    return out_np


def softmax_rows_backward(const real[:, ::1] p, const real[:, ::1] dp):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t c = p.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] dz = out_np
    cdef Py_ssize_t i, j
    cdef double dot
    with nogil:
        for i in range(n):
            dot = 0.0
            for j in range(c):
                dot += <double> p[i, j] * <double> dp[i, j]
            for j in range(c):
                dz[i, j] = <real> (<double> p[i, j] * (<double> dp[i, j] - dot))
    return out_np


def layernorm_forward(const real[:, ::1] x, const real[::1] gain, const real[::1] bias, double eps):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_np = _empty(n, c, real is float)
    mean_np = np.empty(n, dtype=np.float64)
    rstd_np = np.empty(n, dtype=np.float64)
    cdef real[:, ::1] y = out_np
    cdef double[::1] mean = mean_np
    cdef double[::1] rstd = rstd_np
    cdef Py_ssize_t i, j
    cdef double mu, var, d, r
    with nogil:
        for i in range(n):
            mu = 0.0
            for j in range(c):
                mu += x[i, j]
            mu /= c
            var = 0.0
            for j in range(c):
                d = <double> x[i, j] - mu
                var += d * d
            var /= c
            r = 1.0 / sqrt(var + eps)
            mean[i] = mu
            rstd[i] = r
            for j in range(c):
                y[i, j] = <real> ((<double> x[i, j] - mu) * r * <double> gain[j] + <double> bias[j])
    return out_np, mean_np, rstd_np


def layernorm_backward(const real[:, ::1] dy, const real[:, ::1] x, const double[::1] mean,
                       const double[::1] rstd, const real[::1] gain):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    dx_np = _empty(n, c, real is float)
    dgain_acc = np.zeros(c, dtype=np.float64)
    dbias_acc = np.zeros(c, dtype=np.float64)
    cdef real[:, ::1] dx = dx_np
    cdef double[::1] dg = dgain_acc
    cdef double[::1] db = dbias_acc
    cdef Py_ssize_t i, j
    cdef double s1, s2, xh, dxh, mu, r
    with nogil:
        for i in range(n):
            mu = mean[i]
            r = rstd[i]
            s1 = 0.0
            s2 = 0.0
            for j in range(c):
                xh = (<double> x[i, j] - mu) * r
                dxh = <double> dy[i, j] * <double> gain[j]
                s1 += dxh
                s2 += dxh * xh
                dg[j] += <double> dy[i, j] * xh
                db[j] += <double> dy[i, j]
            for j in range(c):
                xh = (<double> x[i, j] - mu) * r
                dxh = <double> dy[i, j] * <double> gain[j]
                dx[i, j] = <real> (r * (dxh - (s1 + xh * s2) / c))
    if real is float:
        return dx_np, dgain_acc.astype(np.float32), dbias_acc.astype(np.float32)
    return dx_np, dgain_acc, dbias_acc


def gelu_forward(const real[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] y = out_np
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(n):
            for j in range(c):
                v = <double> x[i, j]
                y[i, j] = <real> (0.5 * v * (1.0 + erf(v * INV_SQRT2)))
    return out_np


def gelu_backward(const real[:, ::1] x, const real[:, ::1] dy):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] dx = out_np
    cdef Py_ssize_t i, j
    cdef double v, d
    with nogil:
        for i in range(n):
            for j in range(c):
                v = <double> x[i, j]
                d = 0.5 * (1.0 + erf(v * INV_SQRT2)) + v * INV_SQRT_2PI * exp(-0.5 * v * v)
                dx[i, j] = <real> (<double> dy[i, j] * d)
    return out_np


def silu_forward(const real[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] y = out_np
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(n):
            for j in range(c):
                v = <double> x[i, j]
                y[i, j] = <real> (v / (1.0 + exp(-v)))
    return out_np


def silu_backward(const real[:, ::1] x, const real[:, ::1] dy):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c = x.shape[1]
    out_np = _empty(n, c, real is float)
    cdef real[:, ::1] dx = out_np
    cdef Py_ssize_t i, j
    cdef double v, sig
    with nogil:
        for i in range(n):
            for j in range(c):
                v = <double> x[i, j]
                sig = 1.0 / (1.0 + exp(-v))
                dx[i, j] = <real> (<double> dy[i, j] * sig * (1.0 + v * (1.0 - sig)))
    return out_np
