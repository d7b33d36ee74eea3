# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_kernels_py`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, hypot

cnp.import_array()

KIND_SCALAR = 0
KIND_FULL = 1


def osborne_sweeps(double[:, ::1] N, int max_sweeps, double tol):
    cdef Py_ssize_t v = N.shape[0]
    cdef Py_ssize_t i, r
    cdef double col, row, di, d2, f, f_new
    cdef int sweeps = 0
    cdef bint done
    d_arr = np.ones(v)
    clamped_arr = np.zeros(v, dtype=np.uint8)
    cdef double[::1] d = d_arr
    cdef unsigned char[::1] clamped = clamped_arr

    f = 0.0
    for i in range(v):
        for r in range(v):
            f += N[i, r]
    history = [f]
    while sweeps < max_sweeps:
        for i in range(v):
            col = 0.0
            row = 0.0
            for r in range(v):
                if r != i:
                    col += N[r, i]
                    row += N[i, r]
            if col > 0.0 and row > 0.0:
                di = pow(col / row, 0.25)
            else:
                if (col > 0.0) != (row > 0.0):
                    clamped[i] = 1
                continue
            d2 = di * di
            for r in range(v):
                if r != i:
                    N[i, r] *= d2
                    N[r, i] /= d2
            d[i] *= di
        sweeps += 1
        # same summation order as ndarray.sum() is not guaranteed; callers
        # only rely on the tolerance, not on bitwise agreement
        f_new = 0.0
        for i in range(v):
            for r in range(v):
                f_new += N[i, r]
        history.append(f_new)
        done = fabs(f - f_new) <= tol * f
        f = f_new
        if done:
            break
    return d_arr, sweeps, history, clamped_arr.astype(bool)


cdef inline void _qeval(double[::1] p, double x, double y, double* out) noexcept nogil:
    cdef double c0 = p[0], a1 = p[1], b1 = p[2], c2 = p[3], a3 = p[4]
    cdef double b3 = p[5], a4 = p[6], b4 = p[7], c5 = p[8]
    cdef double A = c2 + 2.0 * a3
    cdef double B = c2 - 2.0 * a3
    cdef double C = 4.0 * b3
    cdef double r = x * x + y * y
    cdef double cub = a4 * x - b4 * y
    out[0] = (c0 + 2.0 * a1 * x - 2.0 * b1 * y + A * x * x + B * y * y - C * x * y
              + 2.0 * cub * r + c5 * r * r)
    out[1] = 2.0 * a1 + 2.0 * A * x - C * y + 2.0 * a4 * r + 4.0 * x * cub + 4.0 * c5 * r * x
    out[2] = -2.0 * b1 + 2.0 * B * y - C * x - 2.0 * b4 * r + 4.0 * y * cub + 4.0 * c5 * r * y
    out[3] = 2.0 * A + 12.0 * a4 * x - 4.0 * b4 * y + 4.0 * c5 * (r + 2.0 * x * x)
    out[4] = -C + 4.0 * a4 * y - 4.0 * b4 * x + 8.0 * c5 * x * y
    out[5] = 2.0 * B + 4.0 * a4 * x - 12.0 * b4 * y + 4.0 * c5 * (r + 2.0 * y * y)


def quartic_eval(p, double x, double y):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double out[6]
    _qeval(pv, x, y, out)
    return out[0], out[1], out[2], out[3], out[4], out[5]


def quartic_value(p, double x, double y):
    return quartic_eval(p, x, y)[0]


def quartic_newton(p, int max_iter, double gtol):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double x = 0.0, y = 0.0
    cdef double f, gx, gy, hxx, hxy, hyy, tau, a, c, det, dx, dy, slope, t
    cdef double out[6]
    cdef double trial[6]
    cdef int it = 0
    while it < max_iter:
        _qeval(pv, x, y, out)
        f = out[0]; gx = out[1]; gy = out[2]
        hxx = out[3]; hxy = out[4]; hyy = out[5]
        if hypot(gx, gy) <= gtol * (1.0 + fabs(f)):
            break
        tau = 0.0
        while not (hxx + tau > 0.0 and (hxx + tau) * (hyy + tau) - hxy * hxy > 0.0):
            tau = 1e-12 if tau == 0.0 else tau * 10.0
            if tau > 1e300:
                return x, y, it
        a = hxx + tau
        c = hyy + tau
        det = a * c - hxy * hxy
        dx = -(c * gx - hxy * gy) / det
        dy = -(a * gy - hxy * gx) / det
        slope = gx * dx + gy * dy
        if not slope < 0.0:
            break
        t = 1.0
        while True:
            _qeval(pv, x + t * dx, y + t * dy, trial)
            if trial[0] <= f + 0.25 * t * slope:
                break
            t *= 0.5
            if t < 1e-16:
                return x, y, it
        x += t * dx
        y += t * dy
        it += 1
    return x, y, it


def align(double complex[::1] x, double complex[::1] y, kinds, starts, stops):
    cdef Py_ssize_t nb = len(kinds)
    cdef Py_ssize_t k, j, s0, s1
    cdef double complex c
    cdef double ac, nx, ny, scale
    cdef long[::1] kv = np.ascontiguousarray(kinds, dtype=np.int_)
    cdef long[::1] sv = np.ascontiguousarray(starts, dtype=np.int_)
    cdef long[::1] ev = np.ascontiguousarray(stops, dtype=np.int_)
    out_arr = np.empty(y.shape[0], dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    for k in range(nb):
        s0 = sv[k]
        s1 = ev[k]
        if kv[k] == 0:
            c = 0.0
            for j in range(s0, s1):
                c = c + y[j].conjugate() * x[j]
            ac = hypot(c.real, c.imag)
            if ac > 0.0:
                c = c / ac
            else:
                c = 1.0
            for j in range(s0, s1):
                out[j] = y[j] * c
        else:
            nx = 0.0
            ny = 0.0
            for j in range(s0, s1):
                nx += x[j].real * x[j].real + x[j].imag * x[j].imag
                ny += y[j].real * y[j].real + y[j].imag * y[j].imag
            if nx > 0.0:
                scale = sqrt(ny) / sqrt(nx)
                for j in range(s0, s1):
                    out[j] = x[j] * scale
            else:
                for j in range(s0, s1):
                    out[j] = y[j]
    return out_arr
