"""Pure-Python versions of the inner loops.

Same signatures and semantics as the compiled ``_kernels`` extension; used when
the extension is not built or SSVBOUNDS_PURE_PYTHON is set.
"""

import math

import numpy as np

KIND_SCALAR = 0
KIND_FULL = 1


def osborne_sweeps(N, max_sweeps, tol):
    """Gauss-Seidel Osborne balancing on the matrix of squared block norms.

    N[r, c] = ||M_rc||_F^2 (modified in place). Returns (d, sweeps, history,
    clamped) where d are the accumulated diagonal scalings, history holds
    ||D M D^-1||_F^2 before the first and after each sweep, and clamped[i]
    marks a coordinate whose optimal scaling degenerated to 0 or infinity.
    """
    v = N.shape[0]
    d = np.ones(v)
    clamped = np.zeros(v, dtype=bool)
    f = float(N.sum())
    history = [f]
    sweeps = 0
    while sweeps < max_sweeps:
        for i in range(v):
            col = 0.0
            row = 0.0
            for r in range(v):
                if r != i:
                    col += N[r, i]
                    row += N[i, r]
            if col > 0.0 and row > 0.0:
                di = (col / row) ** 0.25
            else:
                if (col > 0.0) != (row > 0.0):
                    clamped[i] = True
                continue
            d2 = di * di
            for r in range(v):
                if r != i:
                    N[i, r] *= d2
                    N[r, i] /= d2
            d[i] *= di
        sweeps += 1
        f_new = float(N.sum())
        history.append(f_new)
        done = abs(f - f_new) <= tol * f
        f = f_new
        if done:
            break
    return d, sweeps, history, clamped


def quartic_eval(p, x, y):
    """Value, gradient and Hessian of the real quartic.

    p = (c0, Re c1, Im c1, c2, Re c3, Im c3, Re c4, Im c4, c5).
    """
    c0, a1, b1, c2, a3, b3, a4, b4, c5 = p
    A = c2 + 2.0 * a3
    B = c2 - 2.0 * a3
    C = 4.0 * b3
    r = x * x + y * y
    cub = a4 * x - b4 * y
    f = (c0 + 2.0 * a1 * x - 2.0 * b1 * y + A * x * x + B * y * y - C * x * y
         + 2.0 * cub * r + c5 * r * r)
    gx = 2.0 * a1 + 2.0 * A * x - C * y + 2.0 * a4 * r + 4.0 * x * cub + 4.0 * c5 * r * x
    gy = -2.0 * b1 + 2.0 * B * y - C * x - 2.0 * b4 * r + 4.0 * y * cub + 4.0 * c5 * r * y
    hxx = 2.0 * A + 12.0 * a4 * x - 4.0 * b4 * y + 4.0 * c5 * (r + 2.0 * x * x)
    hyy = 2.0 * B + 4.0 * a4 * x - 12.0 * b4 * y + 4.0 * c5 * (r + 2.0 * y * y)
    hxy = -C + 4.0 * a4 * y - 4.0 * b4 * x + 8.0 * c5 * x * y
    return f, gx, gy, hxx, hxy, hyy


def quartic_value(p, x, y):
    return quartic_eval(p, x, y)[0]


def quartic_newton(p, max_iter, gtol):
    """Damped Newton from (0, 0) with Armijo backtracking.

    An indefinite Hessian is shifted by tau*I, tau = 1e-12, 1e-11, ... until
    positive definite. Returns (x, y, iterations).
    """
    x = 0.0
    y = 0.0
    it = 0
    while it < max_iter:
        f, gx, gy, hxx, hxy, hyy = quartic_eval(p, x, y)
        if math.hypot(gx, gy) <= gtol * (1.0 + abs(f)):
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
        while quartic_value(p, x + t * dx, y + t * dy) > f + 0.25 * t * slope:
            t *= 0.5
            if t < 1e-16:
                return x, y, it
        x += t * dx
        y += t * dy
        it += 1
    return x, y, it


def align(x, y, kinds, starts, stops):
    """Per-block alignment used by the standard power iteration.

    Repeated-scalar block: phase(y_i^H x_i) * y_i; full block:
    (||y_i|| / ||x_i||) * x_i. Degenerate blocks fall back to y_i.
    """
    out = np.empty_like(y)
    for k in range(len(kinds)):
        s = slice(starts[k], stops[k])
        xi = x[s]
        yi = y[s]
        if kinds[k] == KIND_SCALAR:
            c = np.vdot(yi, xi)
            ac = abs(c)
            out[s] = yi * (c / ac) if ac > 0.0 else yi
        else:
            nx = math.sqrt(float(np.vdot(xi, xi).real))
            if nx > 0.0:
                ny = math.sqrt(float(np.vdot(yi, yi).real))
                out[s] = xi * (ny / nx)
            else:
                out[s] = yi
    return out
