"""Compiled kernels: profile evaluation and a Dormand-Prince 5(4) Pruefer integrator.

State is (theta, log r) with u = r sin(theta), c u' = r cos(theta):

    theta'  = cos^2(theta)/c + (lam - c mu^2) sin^2(theta)
    log r'  = (1/c - (lam - c mu^2)) sin(theta) cos(theta)

Profiles are passed as ``(kind, params)`` pairs (see ``profile.kernel_spec``).
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_UNDERFLOW = 1


@njit(cache=True)
def c_eval(kind, params, y):
    if kind == 0:
        n = int(params[0])
        bp = params[1 : n + 2]
        j = np.searchsorted(bp, y, side="right") - 1
        if j < 0:
            j = 0
        if j > n - 1:
            j = n - 1
        return params[n + 2 + j]
    if kind == 1:
        n = int(params[0])
        return np.interp(y, params[1 : n + 1], params[n + 1 : 2 * n + 1])
    if kind == 2:
        return params[0]
    if kind == 3:
        return params[0] + (params[1] - params[0]) * y / params[2]
    if kind == 4:
        return params[0] + params[1] * math.sin(math.pi * y / params[2])
    d = (y - params[2]) / params[3]
    return params[0] - (params[0] - params[1]) * math.exp(-d * d)


@njit(cache=True)
def _rhs(kind, params, cfix, mu2, lam, y, th):
    c = cfix if cfix > 0.0 else c_eval(kind, params, y)
    q = lam - c * mu2
    s = math.sin(th)
    co = math.cos(th)
    return co * co / c + q * s * s, (1.0 / c - q) * s * co


@njit(cache=True)
def dp_step(kind, params, cfix, mu2, lam, y, th, lr, h):
    """One Dormand-Prince step; returns 5th-order state and the error estimate."""
    k1t, k1l = _rhs(kind, params, cfix, mu2, lam, y, th)
    k2t, k2l = _rhs(kind, params, cfix, mu2, lam, y + h / 5.0, th + h * (k1t / 5.0))
    k3t, k3l = _rhs(
        kind, params, cfix, mu2, lam, y + 3.0 * h / 10.0, th + h * (3.0 / 40.0 * k1t + 9.0 / 40.0 * k2t)
    )
    k4t, k4l = _rhs(
        kind, params, cfix, mu2, lam, y + 4.0 * h / 5.0,
        th + h * (44.0 / 45.0 * k1t - 56.0 / 15.0 * k2t + 32.0 / 9.0 * k3t),
    )
    k5t, k5l = _rhs(
        kind, params, cfix, mu2, lam, y + 8.0 * h / 9.0,
        th + h * (19372.0 / 6561.0 * k1t - 25360.0 / 2187.0 * k2t + 64448.0 / 6561.0 * k3t
                  - 212.0 / 729.0 * k4t),
    )
    k6t, k6l = _rhs(
        kind, params, cfix, mu2, lam, y + h,
        th + h * (9017.0 / 3168.0 * k1t - 355.0 / 33.0 * k2t + 46732.0 / 5247.0 * k3t
                  + 49.0 / 176.0 * k4t - 5103.0 / 18656.0 * k5t),
    )
    b1, b3, b4, b5, b6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
    th5 = th + h * (b1 * k1t + b3 * k3t + b4 * k4t + b5 * k5t + b6 * k6t)
    lr5 = lr + h * (b1 * k1l + b3 * k3l + b4 * k4l + b5 * k5l + b6 * k6l)
    k7t, k7l = _rhs(kind, params, cfix, mu2, lam, y + h, th5)
    e1, e3, e4, e5, e6, e7 = (
        71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
    )
    et = h * (e1 * k1t + e3 * k3t + e4 * k4t + e5 * k5t + e6 * k6t + e7 * k7t)
    el = h * (e1 * k1l + e3 * k3l + e4 * k4l + e5 * k5l + e6 * k6l + e7 * k7l)
    return th5, lr5, et, el


@njit(cache=True)
def segment_cfix(kind, params, a, b):
    """Constant coefficient on a PC segment (knots are mandatory stops)."""
    if kind == 0:
        return c_eval(kind, params, 0.5 * (a + b))
    return -1.0


@njit(cache=True)
def integrate(kind, params, mu, lam, stops, theta0, logr0, rtol, atol, record):
    """Integrate through the monotone sequence ``stops`` (either direction).

    Returns (status, theta_at_stops, logr_at_stops, rec_y, rec_theta, rec_logr,
    rec_cfix, n_rec).  The record holds every accepted step endpoint when
    ``record`` is true.
    """
    n = stops.size
    th_out = np.empty(n)
    lr_out = np.empty(n)
    th_out[0] = theta0
    lr_out[0] = logr0
    cap = 1024 if record else 1
    rec_y = np.empty(cap)
    rec_t = np.empty(cap)
    rec_l = np.empty(cap)
    rec_c = np.empty(cap)
    n_rec = 0
    mu2 = mu * mu
    th = theta0
    lr = logr0
    span = abs(stops[n - 1] - stops[0])
    h = span / 64.0
    status = STATUS_OK
    if record:
        rec_y[0] = stops[0]
        rec_t[0] = th
        rec_l[0] = lr
        rec_c[0] = segment_cfix(kind, params, stops[0], stops[min(1, n - 1)])
        n_rec = 1
    for i in range(n - 1):
        a = stops[i]
        b = stops[i + 1]
        if a == b:
            th_out[i + 1] = th
            lr_out[i + 1] = lr
            continue
        direction = 1.0 if b > a else -1.0
        cfix = segment_cfix(kind, params, a, b)
        y = a
        while (b - y) * direction > 0.0:
            rem = abs(b - y)
            last = rem <= h
            hh = (rem if last else h) * direction
            th5, lr5, et, el = dp_step(kind, params, cfix, mu2, lam, y, th, lr, hh)
            sc_t = atol + rtol * max(1.0, abs(th), abs(th5))
            sc_l = atol + rtol * max(1.0, abs(lr), abs(lr5))
            err = max(abs(et) / sc_t, abs(el) / sc_l)
            if err <= 1.0:
                y = b if last else y + hh
                th = th5
                lr = lr5
                if record:
                    if n_rec == rec_y.size:
                        new = 2 * rec_y.size
                        ry = np.empty(new)
                        rt = np.empty(new)
                        rl = np.empty(new)
                        rc = np.empty(new)
                        ry[:n_rec] = rec_y[:n_rec]
                        rt[:n_rec] = rec_t[:n_rec]
                        rl[:n_rec] = rec_l[:n_rec]
                        rc[:n_rec] = rec_c[:n_rec]
                        rec_y, rec_t, rec_l, rec_c = ry, rt, rl, rc
                    rec_y[n_rec] = y
                    rec_t[n_rec] = th
                    rec_l[n_rec] = lr
                    rec_c[n_rec] = cfix
                    n_rec += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if not last or abs(hh) * fac > h:
                    h = abs(hh) * fac
            else:
                h = abs(hh) * max(0.2, 0.9 * err ** -0.2)
                if h < 1e-14 * max(1.0, abs(y)) or h < 1e-15 * span:
                    status = STATUS_UNDERFLOW
                    return status, th_out, lr_out, rec_y, rec_t, rec_l, rec_c, n_rec
        th_out[i + 1] = th
        lr_out[i + 1] = lr
    return status, th_out, lr_out, rec_y, rec_t, rec_l, rec_c, n_rec


@njit(cache=True)
def substep(kind, params, cfix, mu, lam, y, th, lr, h, rtol, atol):
    """Advance from a recorded state by ``h`` (possibly several sub-steps)."""
    mu2 = mu * mu
    if h == 0.0:
        return th, lr
    direction = 1.0 if h > 0 else -1.0
    target = y + h
    step = abs(h)
    while (target - y) * direction > 0.0:
        rem = abs(target - y)
        last = rem <= step
        hh = (rem if last else step) * direction
        th5, lr5, et, el = dp_step(kind, params, cfix, mu2, lam, y, th, lr, hh)
        sc_t = atol + rtol * max(1.0, abs(th), abs(th5))
        sc_l = atol + rtol * max(1.0, abs(lr), abs(lr5))
        err = max(abs(et) / sc_t, abs(el) / sc_l)
        if err <= 1.0:
            y = target if last else y + hh
            th = th5
            lr = lr5
        else:
            step = abs(hh) * max(0.2, 0.9 * err ** -0.2)
            if step < 1e-16 * max(1.0, abs(y)):
                break
    return th, lr
