"""Composite quadrature on cubic Hermite interpolants of sampled (u, u') data."""

from __future__ import annotations

import numpy as np

_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)


def hermite_eval(x0, h, u0, u1, d0, d1, tau):
    """Cubic Hermite interpolant on cells of width h at local coordinate tau in [0, 1]."""
    t2 = tau * tau
    t3 = t2 * tau
    return (
        (2 * t3 - 3 * t2 + 1) * u0
        + (t3 - 2 * t2 + tau) * h * d0
        + (-2 * t3 + 3 * t2) * u1
        + (t3 - t2) * h * d1
    )


def hermite_product_integral(x, f, df_right, df_left, g=None, dg_right=None, dg_left=None, a=None, b=None):
    """Integral of f*g over [a, b] using per-cell Hermite interpolants.

    ``df_right[i]`` is the derivative at ``x[i]`` seen from cell i and
    ``df_left[i]`` the derivative seen from cell i-1, so jumps in the
    derivative at nodes are honoured.  With ``g`` omitted the integrand is f².
    """
    x = np.asarray(x, dtype=float)
    if g is None:
        g, dg_right, dg_left = f, df_right, df_left
    a = x[0] if a is None else float(a)
    b = x[-1] if b is None else float(b)
    h = np.diff(x)
    lo = np.clip((a - x[:-1]) / h, 0.0, 1.0)
    hi = np.clip((b - x[:-1]) / h, 0.0, 1.0)
    keep = hi > lo
    if not keep.any():
        return 0.0
    h, lo, hi = h[keep], lo[keep], hi[keep]
    idx = np.flatnonzero(keep)
    tau = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL4_X[None, :]
    fv = hermite_eval(None, h[:, None], f[idx, None], f[idx + 1, None],
                      df_right[idx, None], df_left[idx + 1, None], tau)
    gv = hermite_eval(None, h[:, None], g[idx, None], g[idx + 1, None],
                      dg_right[idx, None], dg_left[idx + 1, None], tau)
    return float(np.sum(0.5 * (hi - lo) * h * ((fv * gv) @ _GL4_W)))
