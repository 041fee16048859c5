"""Fiber eigenproblem  -(c u')' + (c mu^2 - lam) u = 0,  u(0) = u(H) = 0.

Two propagation engines share one interface:

* exact transfer matrices and an exact Pruefer phase for piecewise-constant
  profiles (fast path, also used as an internal oracle);
* adaptive Dormand-Prince integration of the Pruefer system for any profile.

Eigenvalues are found by bisection on the monotone map lam -> theta(H; lam),
which certifies the index ell.  Eigenfunctions are built by shooting from both
ends and matching inside the longest oscillatory region, so evanescent walls
are always integrated in their stable direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from . import _rk
from ._quad import hermite_product_integral
from .errors import (
    BracketFailure,
    NotAnEigenvalue,
    NotPiecewiseConstant,
    NotSmoothProfile,
    OutOfSector,
    StepSizeUnderflow,
)
from .profile import AnalyticPreset, CelerityProfile, PiecewiseConstant, SampledGrid

__all__ = [
    "transfer_matrix",
    "propagate_pc",
    "PcTrace",
    "PrueferShot",
    "shoot_pruefer",
    "theta_at_H",
    "eigenvalue",
    "eigenfunction",
    "eigenpair",
    "FiberEigenpair",
    "spectrum_in_range",
    "LiouvilleFit",
    "liouville_transform",
    "liouville_alpha_bounds",
    "default_grid",
]

PI = math.pi
RTOL = 1e-10
ATOL = 1e-12
PHASE_TOL = 1e-9  # |theta(H) - ell*pi| at the returned eigenvalue
PHASE_SLACK = 1e-10  # phase margin when locating zeros at piece ends
_BRENT_RTOL = 4 * np.finfo(float).eps


def as_piecewise_constant(profile: CelerityProfile) -> PiecewiseConstant:
    if isinstance(profile, PiecewiseConstant):
        return profile
    if isinstance(profile, SampledGrid) and profile.interp == "step":
        return profile.to_piecewise_constant()
    raise NotPiecewiseConstant(f"{type(profile).__name__} is not piecewise constant")


def _resolve_method(profile: CelerityProfile, method: str) -> str:
    if method == "auto":
        return "pc" if profile.is_piecewise_constant else "rk"
    if method == "pc":
        as_piecewise_constant(profile)
    elif method != "rk":
        raise ValueError(f"unknown method {method!r}")
    return method


# ---------------------------------------------------------------------------
# transfer matrices
# ---------------------------------------------------------------------------


def transfer_matrix(c: float, mu: float, lam: float, length: float) -> np.ndarray:
    """Map (u, c u') across a piece of constant c and the given length."""
    q = (lam - c * mu * mu) / c
    if q > 0:
        w = math.sqrt(q)
        cs, sn = math.cos(w * length), math.sin(w * length)
        return np.array([[cs, sn / (c * w)], [-c * w * sn, cs]])
    if q < 0:
        k = math.sqrt(-q)
        ch, sh = math.cosh(k * length), math.sinh(k * length)
        return np.array([[ch, sh / (c * k)], [c * k * sh, ch]])
    return np.array([[1.0, length / c], [0.0, 1.0]])


@dataclass(frozen=True)
class PcTrace:
    """States (u, c u') at every breakpoint and the per-piece matrices."""

    breakpoints: np.ndarray
    states: np.ndarray
    matrices: np.ndarray

    @property
    def state_H(self) -> np.ndarray:
        return self.states[-1]

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def flux(self) -> np.ndarray:
        return self.states[:, 1]


def propagate_pc(profile, mu: float, lam: float, state0=(0.0, 1.0)) -> PcTrace:
    pc = as_piecewise_constant(profile)
    s0 = np.asarray(state0, dtype=float)
    if not np.any(s0):
        raise ValueError("initial state must be nonzero")
    mats = np.array([transfer_matrix(c, mu, lam, L) for c, L in zip(pc.values, pc.lengths)])
    states = np.empty((pc.n_pieces + 1, 2))
    states[0] = s0
    for j, m in enumerate(mats):
        states[j + 1] = m @ states[j]
    return PcTrace(pc.breakpoints, states, mats)


# ---------------------------------------------------------------------------
# exact Pruefer phase on constant pieces
# ---------------------------------------------------------------------------


def _nearest_branch(base, target):
    """Representative of base + 2 pi j closest to target."""
    return base + 2 * PI * np.round((target - base) / (2 * PI))


def _piece_eval(c, mu2, lam, th0, s):
    """theta and log r increment after distance s >= 0 in a constant piece.

    The start state is the unit vector (sin th0, cos th0).
    """
    s = np.asarray(s, dtype=float)
    q = (lam - c * mu2) / c
    u0, f0 = math.sin(th0), math.cos(th0)
    if q > 0:
        w = math.sqrt(q)
        sc = c * w
        k0 = round(th0 / PI)
        d0 = th0 - k0 * PI
        psi0 = k0 * PI + math.atan2(sc * math.sin(d0), math.cos(d0))
        psi = psi0 + w * s
        k1 = np.round(psi / PI)
        d1 = psi - k1 * PI
        theta = k1 * PI + np.arctan2(np.sin(d1), sc * np.cos(d1))
        cs, sn = np.cos(w * s), np.sin(w * s)
        u = u0 * cs + f0 * sn / sc
        f = -sc * u0 * sn + f0 * cs
        return theta, 0.5 * np.log(u * u + f * f)
    if q < 0:
        k = math.sqrt(-q)
        sk = c * k
        E = k * s
        em = np.exp(-2.0 * E)
        ch = 0.5 * (1.0 + em)
        sh = -0.5 * np.expm1(-2.0 * E)
        u = u0 * ch + f0 * sh / sk
        f = sk * u0 * sh + f0 * ch
        n_zero = math.floor(th0 / PI) + (s >= _hyper_zero(u0, f0, sk, k))
        theta = _nearest_branch(np.arctan2(u, f), (n_zero + 0.5) * PI)
        return theta, E + 0.5 * np.log(u * u + f * f)
    u = u0 + f0 * s / c
    f = np.full_like(u, f0)
    s_star = -u0 * c / f0 if f0 != 0 else -1.0
    n_zero = math.floor(th0 / PI) + ((s_star > 0) & (s >= s_star))
    theta = _nearest_branch(np.arctan2(u, f), (n_zero + 0.5) * PI)
    return theta, 0.5 * np.log(u * u + f * f)


def _hyper_zero(u0, f0, sk, k):
    """Distance to the zero of u in an evanescent piece, or +inf."""
    if f0 == 0.0:
        return math.inf
    tau = -u0 * sk / f0
    if 0.0 < tau < 1.0:
        return math.atanh(tau) / k
    return math.inf


def _hyper_flux_zero(u0, f0, sk, k):
    if u0 == 0.0:
        return math.inf
    tau = -f0 / (u0 * sk)
    if 0.0 < tau < 1.0:
        return math.atanh(tau) / k
    return math.inf


def _piece_crossings(c, mu2, lam, th0, L):
    """Distances in (0, L] where u = 0 and where c u' = 0."""
    q = (lam - c * mu2) / c
    u0, f0 = math.sin(th0), math.cos(th0)
    if q > 0:
        w = math.sqrt(q)
        sc = c * w
        k0 = round(th0 / PI)
        d0 = th0 - k0 * PI
        psi0 = k0 * PI + math.atan2(sc * math.sin(d0), math.cos(d0))
        psi1 = psi0 + w * L
        j_lo = math.floor(psi0 / (PI / 2)) + 1
        # slack keeps a crossing that rounding puts just past a matching point or breakpoint
        j_hi = math.floor(psi1 / (PI / 2) + PHASE_SLACK)
        zs, fz = [], []
        for j in range(j_lo, j_hi + 1):
            s = (j * PI / 2 - psi0) / w
            if 0 < s <= L * (1 + PHASE_SLACK) + PHASE_SLACK / w:
                (zs if j % 2 == 0 else fz).append(min(s, L))
        return zs, fz
    if q < 0:
        k = math.sqrt(-q)
        sz = _hyper_zero(u0, f0, c * k, k)
        sf = _hyper_flux_zero(u0, f0, c * k, k)
        return ([sz] if 0 < sz <= L else []), ([sf] if 0 < sf <= L else [])
    if f0 != 0.0:
        s_star = -u0 * c / f0
        if 0 < s_star <= L:
            return [s_star], []
    return [], []


def _pc_phase(values, lengths, mu, lam, th0=0.0, lr0=0.0):
    """Exact (theta, log r) at every breakpoint of a PC profile."""
    n = len(values)
    th = np.empty(n + 1)
    lr = np.empty(n + 1)
    th[0], lr[0] = th0, lr0
    mu2 = mu * mu
    for j in range(n):
        t, l = _piece_eval(values[j], mu2, lam, th[j], lengths[j])
        th[j + 1] = float(t)
        lr[j + 1] = lr[j] + float(l)
    return th, lr


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------


def _rk_run(profile, mu, lam, stops, th0, record):
    kind, params = profile.kernel_spec
    out = _rk.integrate(kind, params, float(mu), float(lam), np.ascontiguousarray(stops, dtype=float),
                        float(th0), 0.0, RTOL, ATOL, record)
    if out[0] != _rk.STATUS_OK:
        raise StepSizeUnderflow(f"step size underflow at mu={mu}, lam={lam}")
    return out


def theta_at_H(profile: CelerityProfile, mu: float, lam: float, method: str = "auto") -> float:
    """Pruefer phase at y = H for the solution with u(0) = 0, c u'(0) > 0."""
    if _resolve_method(profile, method) == "pc":
        pc = as_piecewise_constant(profile)
        return float(_pc_phase(pc.values, pc.lengths, mu, lam)[0][-1])
    return float(_rk_run(profile, mu, lam, profile.knots, 0.0, False)[1][-1])


def _matching_point(profile: CelerityProfile, mu: float, lam: float) -> float:
    """Midpoint of the longest region where lam - c mu^2 >= 0 (else H/2)."""
    if profile.is_piecewise_constant:
        pc = as_piecewise_constant(profile)
        ok = pc.values * mu * mu <= lam
        lo_e, hi_e = pc.breakpoints[:-1], pc.breakpoints[1:]
    else:
        ys = np.union1d(np.linspace(0.0, profile.H, 4001), profile.knots)
        ok = profile.evaluate(ys) * mu * mu <= lam
        lo_e, hi_e = ys, ys
    best, best_len, start = None, -1.0, None
    for i, flag in enumerate(list(ok) + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            a, b = lo_e[start], hi_e[i - 1]
            if b - a > best_len:
                best, best_len = (a, b), b - a
            start = None
    if best is None or best_len <= 0:
        return 0.5 * profile.H
    return 0.5 * (best[0] + best[1])


class _PcSolution:
    """Matched two-sided exact solution for a PC profile."""

    def __init__(self, pc: PiecewiseConstant, mu: float, lam: float, y_m: float):
        self.H = pc.H
        self.mu2 = mu * mu
        self.lam = lam
        bp, vals = pc.breakpoints, pc.values
        self.y_m = y_m
        n_left = int(np.sum(bp < y_m))
        self.lbp = np.concatenate((bp[bp < y_m], [y_m]))
        self.lvals = vals[:n_left]
        rbp = np.concatenate(([y_m], bp[bp > y_m]))
        self.rvals = vals[vals.size - (rbp.size - 1):][::-1].copy()
        self.rbp = (self.H - rbp)[::-1]  # reflected coordinate, ascending from 0
        self.rbp[0] = 0.0
        self.lth, self.llr = _pc_phase(self.lvals, np.diff(self.lbp), mu, lam)
        self.rth, self.rlr = _pc_phase(self.rvals, np.diff(self.rbp), mu, lam)
        # original-orientation phase of the right shot is pi - theta'
        th_r_m = PI - self.rth[-1]
        self.j_shift = round((self.lth[-1] - th_r_m) / PI)
        self.lr_shift = self.llr[-1] - self.rlr[-1]
        self.theta_H = PI + self.j_shift * PI
        self.zeros, self.flux_zeros = self._crossings()

    def _crossings(self):
        zs, fz = [], []
        for j, c in enumerate(self.lvals):
            a, b = _piece_crossings(c, self.mu2, self.lam, self.lth[j], self.lbp[j + 1] - self.lbp[j])
            zs += [self.lbp[j] + s for s in a]
            fz += [self.lbp[j] + s for s in b]
        for j, c in enumerate(self.rvals):
            a, b = _piece_crossings(c, self.mu2, self.lam, self.rth[j], self.rbp[j + 1] - self.rbp[j])
            zs += [self.H - (self.rbp[j] + s) for s in a]
            fz += [self.H - (self.rbp[j] + s) for s in b]
        return _dedupe(zs, self.H), _dedupe(fz, self.H)

    def state(self, ys):
        ys = np.asarray(ys, dtype=float)
        th = np.empty_like(ys)
        lr = np.empty_like(ys)
        left = ys <= self.y_m
        if left.any():
            yl = ys[left]
            idx = np.clip(np.searchsorted(self.lbp, yl, side="right") - 1, 0, self.lvals.size - 1)
            t, l = self._eval_side(self.lbp, self.lvals, self.lth, self.llr, yl, idx)
            th[left], lr[left] = t, l
        if (~left).any():
            yr = self.H - ys[~left]
            idx = np.clip(np.searchsorted(self.rbp, yr, side="right") - 1, 0, self.rvals.size - 1)
            t, l = self._eval_side(self.rbp, self.rvals, self.rth, self.rlr, yr, idx)
            th[~left] = PI - t + self.j_shift * PI
            lr[~left] = l + self.lr_shift
        return th, lr

    def _eval_side(self, bp, vals, th_bp, lr_bp, y, idx):
        th = np.empty_like(y)
        lr = np.empty_like(y)
        for j in np.unique(idx):
            m = idx == j
            t, l = _piece_eval(vals[j], self.mu2, self.lam, th_bp[j], y[m] - bp[j])
            th[m] = t
            lr[m] = lr_bp[j] + l
        return th, lr


def _dedupe(points, H, tol=1e-8):
    pts = np.sort(np.asarray(points, dtype=float))
    pts = pts[(pts > tol * H) & (pts < H * (1 - tol))]
    if pts.size < 2:
        return pts
    keep = np.concatenate(([True], np.diff(pts) > tol * H))
    return pts[keep]


class _RkSolution:
    """Matched two-sided Pruefer integration for a general profile."""

    def __init__(self, profile: CelerityProfile, mu: float, lam: float, y_m: float, grid: np.ndarray):
        self.H = profile.H
        self.mu = mu
        self.lam = lam
        self.y_m = y_m
        self.kind, self.params = profile.kernel_spec
        pts = np.union1d(grid, profile.knots)
        left_stops = np.union1d(pts[pts <= y_m], [y_m])
        right_stops = np.union1d(pts[pts >= y_m], [y_m])[::-1].copy()
        _, lth, llr, ry, rt, rl, rc, nr = _rk_run(profile, mu, lam, left_stops, 0.0, True)
        self.left = (ry[:nr].copy(), rt[:nr].copy(), rl[:nr].copy(), rc[:nr].copy())
        _, rth, rlr, ry, rt, rl, rc, nr = _rk_run(profile, mu, lam, right_stops, PI, True)
        # backward records, stored ascending in y
        self.right = (ry[:nr][::-1].copy(), rt[:nr][::-1].copy(), rl[:nr][::-1].copy(), rc[:nr].copy())
        self.right_cfix_desc = rc[:nr].copy()
        self.j_shift = round((lth[-1] - rth[-1]) / PI)
        self.lr_shift = llr[-1] - rlr[-1]
        self.theta_H = PI + self.j_shift * PI
        self.zeros, self.flux_zeros = self._crossings()

    def _sub(self, cfix, y, th, lr, h):
        return _rk.substep(self.kind, self.params, cfix, self.mu, self.lam, y, th, lr, h, RTOL * 1e-2, ATOL)

    def _side_crossings(self, ys, ths, lrs, cf, forward):
        """Crossings along a record sequence given in travel order."""
        zs, fz = [], []
        rnd = np.floor if forward else np.ceil
        kz = rnd(ths / PI)
        kf = rnd((ths - PI / 2) / PI)
        for kk, out, offset in ((kz, zs, 0.0), (kf, fz, PI / 2)):
            for i in np.flatnonzero(kk[1:] != kk[:-1]):
                y0, th0, lr0, cfix, h = ys[i], ths[i], lrs[i], cf[i + 1], ys[i + 1] - ys[i]
                lo, hi = sorted((int(kk[i]), int(kk[i + 1])))
                js = range(lo + 1, hi + 1) if forward else range(lo, hi)
                for j in js:
                    target = j * PI + offset
                    g = lambda s: self._sub(cfix, y0, th0, lr0, s)[0] - target  # noqa: E731
                    a_, b_ = min(0.0, h), max(0.0, h)
                    ga, gb = g(a_), g(b_)
                    if ga == 0.0 or gb == 0.0 or (ga > 0) == (gb > 0):
                        s = a_ if abs(ga) <= abs(gb) else b_
                    else:
                        s = brentq(g, a_, b_, xtol=1e-15, rtol=_BRENT_RTOL)
                    out.append(y0 + s)
        return zs, fz

    def _crossings(self):
        ly, lt, ll, lc = self.left
        z1, f1 = self._side_crossings(ly, lt, ll, lc, True)
        ry, rt, rl, _ = self.right
        # travel order for the right shot is descending y
        z2, f2 = self._side_crossings(ry[::-1], rt[::-1], rl[::-1], self.right_cfix_desc, False)
        return _dedupe(z1 + z2, self.H), _dedupe(f1 + f2, self.H)

    def state(self, ys):
        ys = np.asarray(ys, dtype=float)
        th = np.empty_like(ys)
        lr = np.empty_like(ys)
        for side, mask in (("left", ys <= self.y_m), ("right", ys > self.y_m)):
            if not mask.any():
                continue
            ry, rt, rl, rc = self.left if side == "left" else self.right
            y = ys[mask]
            pos = np.searchsorted(ry, y)
            pos = np.clip(pos, 0, ry.size - 1)
            exact = ry[pos] == y
            t = np.where(exact, rt[pos], 0.0)
            l = np.where(exact, rl[pos], 0.0)
            for i in np.flatnonzero(~exact):
                if side == "left":
                    k = max(pos[i] - 1, 0)
                    cfix = rc[k + 1] if k + 1 < rc.size else rc[-1]
                    t[i], l[i] = self._sub(cfix, ry[k], rt[k], rl[k], y[i] - ry[k])
                else:
                    k = min(pos[i], ry.size - 1)
                    # step from ry[k] down to ry[k-1]; its cfix is stored in travel order
                    cfix = self.right_cfix_desc[ry.size - k] if ry.size - k < ry.size else self.right_cfix_desc[-1]
                    t[i], l[i] = self._sub(cfix, ry[k], rt[k], rl[k], y[i] - ry[k])
            if side == "right":
                t = t + self.j_shift * PI
                l = l + self.lr_shift
            th[mask], lr[mask] = t, l
        return th, lr


@dataclass(frozen=True)
class PrueferShot:
    """Left-to-right Pruefer integration from u(0) = 0."""

    ys: np.ndarray
    theta: np.ndarray
    logr: np.ndarray
    zeros: np.ndarray
    flux_zeros: np.ndarray

    @property
    def theta_H(self) -> float:
        return float(self.theta[-1])


def shoot_pruefer(profile: CelerityProfile, mu: float, lam: float, grid=None, method: str = "auto") -> PrueferShot:
    """Integrate the Pruefer system from theta(0) = 0 across [0, H]."""
    method = _resolve_method(profile, method)
    ys = default_grid(profile, mu, lam, grid)
    if method == "pc":
        sol = _PcSolution(as_piecewise_constant(profile), mu, lam, profile.H)
    else:
        sol = _RkSolution(profile, mu, lam, profile.H, ys)
    th, lr = sol.state(ys)
    return PrueferShot(ys, th, lr, sol.zeros, sol.flux_zeros)


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------


def _bracket(profile: CelerityProfile, mu: float, ell: int) -> tuple[float, float]:
    w = mu * mu + (ell * PI / profile.H) ** 2
    lo, hi = profile.c_min * w, profile.c_max * w
    return lo * (1 - 1e-9), hi * (1 + 1e-9)


def eigenvalue(profile: CelerityProfile, mu: float, ell: int, method: str = "auto") -> float:
    """The unique lam with theta(H; lam) = ell*pi (bisection, certified index)."""
    ell = int(ell)
    if ell < 1:
        raise ValueError("ell must be >= 1")
    method = _resolve_method(profile, method)
    target = ell * PI
    lo, hi = _bracket(profile, mu, ell)
    f_lo = theta_at_H(profile, mu, lo, method) - target
    f_hi = theta_at_H(profile, mu, hi, method) - target
    if not (f_lo < 0 < f_hi):
        raise BracketFailure(f"no sign change for mu={mu}, ell={ell}: [{f_lo}, {f_hi}]")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = theta_at_H(profile, mu, mid, method) - target
        if fm == 0.0:
            return mid
        # the exact PC phase is cheap, so PC brackets are closed to rounding level
        if method == "rk" and hi - lo <= max(1e-10 * mid, 1e-12) and abs(fm) <= PHASE_TOL:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    # phase tolerance below floating resolution (steep theta(H; lam), deep walls)
    return 0.5 * (lo + hi)


def spectrum_in_range(profile: CelerityProfile, mu: float, lam_lo: float, lam_hi: float,
                      method: str = "auto") -> list[tuple[int, float]]:
    """All (ell, lam) with lam_lo < lam <= lam_hi, by winding count."""
    if not lam_lo < lam_hi:
        raise ValueError("need lam_lo < lam_hi")
    n_lo = math.floor(theta_at_H(profile, mu, lam_lo, method) / PI) if lam_lo > 0 else 0
    n_hi = math.floor(theta_at_H(profile, mu, lam_hi, method) / PI)
    out = []
    for ell in range(max(n_lo, 0) + 1, n_hi + 1):
        lam = eigenvalue(profile, mu, ell, method)
        if lam_lo < lam <= lam_hi:
            out.append((ell, lam))
    return out


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------


def default_grid(profile: CelerityProfile, mu: float, lam: float, grid=None) -> np.ndarray:
    """Sample points: uniform cells (resolution scaled with the local wavenumber) plus knots."""
    if grid is None or np.isscalar(grid):
        ys = profile.dense_sample(2000)
        wmax = math.sqrt(float(np.max(np.abs(lam - profile.evaluate(ys) * mu * mu) / profile.evaluate(ys))))
        n = max(2048 if grid is None else int(grid), int(math.ceil(40 * wmax * profile.H)))
        pts = np.linspace(0.0, profile.H, n + 1)
    else:
        pts = np.asarray(grid, dtype=float)
        if pts[0] != 0.0 or pts[-1] != profile.H:
            pts = np.union1d(pts, [0.0, profile.H])
    return np.union1d(pts, profile.knots)


@dataclass(frozen=True, eq=False)
class FiberEigenpair:
    """Normalized eigenpair sampled on ``grid`` (with u'(0) > 0)."""

    profile: CelerityProfile
    mu: float
    ell: int
    lam: float
    grid: np.ndarray
    u: np.ndarray
    flux: np.ndarray
    theta: np.ndarray
    zeros: np.ndarray
    flux_zeros: np.ndarray
    log_scale: float
    method: str
    _solution: object = field(repr=False)

    @property
    def du_right(self) -> np.ndarray:
        return self.flux / self.profile.evaluate(self.grid, "right")

    @property
    def du_left(self) -> np.ndarray:
        return self.flux / self.profile.evaluate(self.grid, "left")

    @property
    def r2(self) -> np.ndarray:
        return self.u ** 2 + self.flux ** 2

    def state_at(self, ys):
        """Normalized (u, c u', theta) at arbitrary points."""
        th, lr = self._solution.state(np.atleast_1d(np.asarray(ys, dtype=float)))
        r = np.exp(lr - self.log_scale)
        return r * np.sin(th), r * np.cos(th), th

    def integral(self, a=None, b=None, other: "FiberEigenpair | None" = None) -> float:
        """Composite Hermite quadrature of u^2 (or u*other.u) over [a, b]."""
        if other is None:
            return hermite_product_integral(self.grid, self.u, self.du_right, self.du_left, a=a, b=b)
        if other.grid.shape != self.grid.shape or np.any(other.grid != self.grid):
            raise ValueError("eigenpairs must share a grid")
        return hermite_product_integral(self.grid, self.u, self.du_right, self.du_left,
                                        other.u, other.du_right, other.du_left, a=a, b=b)


def _certify_index(profile, mu, lam, method, rel=1e-9) -> int:
    """Index ell of an eigenvalue lam, or NotAnEigenvalue.

    Accepts lam when theta(H) is within tolerance of ell*pi, or when
    theta(H) crosses ell*pi within lam*(1 -+ rel) (steep phase maps).
    """
    th = theta_at_H(profile, mu, lam, method) / PI
    ell = round(th)
    if ell >= 1 and abs(th - ell) <= 1e-7 * ell:
        return ell
    lo = theta_at_H(profile, mu, lam * (1 - rel), method) / PI
    hi = theta_at_H(profile, mu, lam * (1 + rel), method) / PI
    ell = math.floor(hi)
    if ell >= 1 and lo <= ell <= hi and math.floor(lo) in (ell - 1, ell):
        return ell
    raise NotAnEigenvalue(f"lam={lam} is not an eigenvalue at mu={mu} (theta(H)/pi={th})")


def eigenfunction(profile: CelerityProfile, mu: float, lam: float, grid=None, method: str = "auto",
                  ell: int | None = None) -> FiberEigenpair:
    """Sample the normalized eigenfunction for an eigenvalue lam."""
    method = _resolve_method(profile, method)
    ell_est = _certify_index(profile, mu, lam, method)
    if ell is not None and ell != ell_est:
        raise NotAnEigenvalue(f"lam={lam} has index {ell_est}, not {ell}")
    ys = default_grid(profile, mu, lam, grid)
    y_m = _matching_point(profile, mu, lam)
    if method == "pc":
        sol = _PcSolution(as_piecewise_constant(profile), mu, lam, y_m)
    else:
        sol = _RkSolution(profile, mu, lam, y_m, ys)
    th, lr = sol.state(ys)
    ref = float(np.max(lr))
    r = np.exp(lr - ref)
    u = r * np.sin(th)
    f = r * np.cos(th)
    u[0] = u[-1] = 0.0
    norm2 = hermite_product_integral(
        ys, u, f / profile.evaluate(ys, "right"), f / profile.evaluate(ys, "left")
    )
    scale = math.sqrt(norm2)
    return FiberEigenpair(
        profile=profile, mu=float(mu), ell=int(ell_est), lam=float(lam), grid=ys,
        u=u / scale, flux=f / scale, theta=th, zeros=sol.zeros, flux_zeros=sol.flux_zeros,
        log_scale=ref + math.log(scale), method=method, _solution=sol,
    )


def eigenpair(profile: CelerityProfile, mu: float, ell: int, grid=None, method: str = "auto") -> FiberEigenpair:
    """eigenvalue() followed by eigenfunction()."""
    lam = eigenvalue(profile, mu, ell, method)
    return eigenfunction(profile, mu, lam, grid, method, ell=ell)


# ---------------------------------------------------------------------------
# Liouville transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiouvilleFit:
    """eta = p^{1/4} u against alpha sin(mu xi), with p = lam c / mu^2 - c^2."""

    xi: np.ndarray
    eta: np.ndarray
    alpha: float
    residual: float
    xi_H: float
    eta_norm2: float
    mu: float


def liouville_transform(profile: CelerityProfile, pair: FiberEigenpair, eps: float | None = None,
                        Lambda: float | None = None) -> LiouvilleFit:
    """Fit eta(xi) ~ alpha sin(mu xi) and report the sup-norm residual."""
    if not isinstance(profile, AnalyticPreset):
        raise NotSmoothProfile("the Liouville transform needs a C^2 analytic preset")
    mu, lam = pair.mu, pair.lam
    lo = (profile.c_max + (eps if eps is not None else 0.0)) * mu * mu
    if lam < lo or (eps is None and lam <= lo):
        raise OutOfSector(f"lam={lam} below (c_M+eps) mu^2 = {lo}")
    if Lambda is not None and lam > (profile.c_max + Lambda) * mu * mu:
        raise OutOfSector(f"lam={lam} above (c_M+Lambda) mu^2")
    y = pair.grid
    p_t = lambda s: lam * profile.evaluate(s) / mu**2 - profile.evaluate(s) ** 2  # noqa: E731
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    a, b = y[:-1], y[1:]
    nodes = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gl_x[None, :]
    integrand = np.sqrt(p_t(nodes.ravel())) / profile.evaluate(nodes.ravel())
    cell = 0.5 * (b - a) * (integrand.reshape(nodes.shape) @ gl_w)
    xi = np.concatenate(([0.0], np.cumsum(cell)))
    eta = p_t(y) ** 0.25 * pair.u
    s = np.sin(mu * xi)
    alpha = trapezoid(eta * s, xi) / trapezoid(s * s, xi)
    residual = float(np.max(np.abs(eta - alpha * s)))
    return LiouvilleFit(xi, eta, float(alpha), residual, float(xi[-1]), float(trapezoid(eta**2, xi)), mu)


def liouville_alpha_bounds(profile: CelerityProfile, fit: LiouvilleFit, eps: float, Lambda: float):
    """(r1, r2) from the normalization identity for the integral of eta^2.

    The eta norm equals the integral of (lam/mu^2 - c) u^2, which lies in
    [eps, c_M + Lambda - c_m] on the sector; subtracting the residual gives
    bounds on |alpha| times the norm of sin(mu xi).
    """
    Hb, mu = fit.xi_H, fit.mu
    S = math.sqrt(Hb / 2 - math.sin(2 * mu * Hb) / (4 * mu))
    z1, z2 = eps, profile.c_max + Lambda - profile.c_min
    r1 = (math.sqrt(z1) - fit.residual * math.sqrt(Hb)) / S
    r2 = (math.sqrt(z2) + fit.residual * math.sqrt(Hb)) / S
    return r1, r2
