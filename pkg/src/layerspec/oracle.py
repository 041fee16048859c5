"""Independent finite-difference eigensolver for the fiber problem.

Conservative three-point scheme on N interior nodes y_i = i h, h = H/(N+1):

    (T u)_i = [c_{i+1/2}(u_i - u_{i+1}) + c_{i-1/2}(u_i - u_{i-1})]/h^2 + c_i mu^2 u_i

with c_{i+1/2} = h / (t(y_{i+1}) - t(y_i)), the exact harmonic mean of c over
the cell (equal to the length-weighted harmonic mean of piece values for
step-type profiles).  Eigenvalues come from Sturm-sequence bisection and
eigenvectors from inverse iteration; no library eigensolver is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ClusterUnresolved, LengthMismatch, TooManyRequested
from .profile import CelerityProfile, PiecewiseConstant, SampledGrid

__all__ = [
    "FdDiscretization",
    "discretize",
    "sturm_count",
    "fd_spectrum",
    "fd_eigenvector",
    "richardson",
    "compare",
    "CompareReport",
]


@dataclass(frozen=True)
class FdDiscretization:
    """Symmetric tridiagonal T: ``diag`` (N,) and ``off`` (N-1,) entries."""

    y: np.ndarray
    h: float
    diag: np.ndarray
    off: np.ndarray

    @property
    def N(self) -> int:
        return self.diag.size

    @property
    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.off)
        row[1:] += np.abs(self.off)
        return float(row.max())

    def gershgorin(self) -> tuple[float, float]:
        rad = np.zeros_like(self.diag)
        rad[:-1] += np.abs(self.off)
        rad[1:] += np.abs(self.off)
        return float(np.min(self.diag - rad)), float(np.max(self.diag + rad))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = self.diag * x
        out[:-1] += self.off * x[1:]
        out[1:] += self.off * x[:-1]
        return out


def _cell_means(profile: CelerityProfile, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact averages of a step profile over [a_i, b_i]."""
    pc = profile if isinstance(profile, PiecewiseConstant) else profile.to_piecewise_constant()
    cum = np.concatenate(([0.0], np.cumsum(pc.lengths * pc.values)))

    def prim(y):
        j = pc.piece_index(y)
        return cum[j] + (y - pc.breakpoints[j]) * pc.values[j]

    return (prim(b) - prim(a)) / (b - a)


def discretize(profile: CelerityProfile, mu: float, N: int) -> FdDiscretization:
    if N < 1:
        raise ValueError("N must be positive")
    H = profile.H
    h = H / (N + 1)
    nodes = np.linspace(0.0, H, N + 2)
    t = profile.travel_time(nodes)
    c_half = h / np.diff(t)
    y = nodes[1:-1]
    step_type = isinstance(profile, PiecewiseConstant) or (
        isinstance(profile, SampledGrid) and profile.interp == "step"
    )
    if step_type:
        c_node = _cell_means(profile, np.maximum(y - h / 2, 0.0), np.minimum(y + h / 2, H))
    else:
        c_node = profile.evaluate(y)
    diag = (c_half[:-1] + c_half[1:]) / h**2 + c_node * mu * mu
    off = -c_half[1:-1] / h**2
    return FdDiscretization(y, h, diag, off)


@njit(cache=True)
def _count(diag, off2, x):
    """Number of eigenvalues of T strictly below x (negative LDL^T pivots)."""
    n = diag.size
    cnt = 0
    d = diag[0] - x
    tiny = 1e-300
    if d < 0:
        cnt += 1
    for i in range(1, n):
        if d == 0.0:
            d = tiny
        d = diag[i] - x - off2[i - 1] / d
        if d < 0:
            cnt += 1
    return cnt


@njit(cache=True)
def _bisect(diag, off2, ks, lo, hi, tol_abs, tol_rel):
    out = np.empty(ks.size)
    for m in range(ks.size):
        k = ks[m]  # 1-based index: find x with count(x) < k <= count(x')
        a = lo
        b = hi
        while b - a > max(tol_abs, tol_rel * abs(0.5 * (a + b))):
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if _count(diag, off2, mid) >= k:
                b = mid
            else:
                a = mid
        out[m] = 0.5 * (a + b)
    return out


def sturm_count(disc: FdDiscretization, x: float) -> int:
    return int(_count(disc.diag, disc.off**2, float(x)))


def _tolerances(disc: FdDiscretization) -> tuple[float, float]:
    return 4 * np.finfo(float).eps * disc.norm_inf, 1e-13


def fd_spectrum(profile: CelerityProfile, mu: float, num_eigs: int, N: int,
                disc: FdDiscretization | None = None) -> np.ndarray:
    """Smallest ``num_eigs`` eigenvalues of T, ascending."""
    if num_eigs > N:
        raise TooManyRequested(f"{num_eigs} eigenvalues requested from an N={N} matrix")
    disc = disc or discretize(profile, mu, N)
    lo, hi = disc.gershgorin()
    tol_abs, tol_rel = _tolerances(disc)
    ks = np.arange(1, num_eigs + 1, dtype=np.int64)
    return _bisect(disc.diag, disc.off**2, ks, lo, hi, tol_abs, tol_rel)


@njit(cache=True)
def _thomas(diag, off, shift, rhs):
    """Solve (T - shift I) x = rhs for symmetric tridiagonal T."""
    n = diag.size
    cp = np.empty(n)
    dp = np.empty(n)
    tiny = 1e-300
    b = diag[0] - shift
    if b == 0.0:
        b = tiny
    cp[0] = off[0] / b if n > 1 else 0.0
    dp[0] = rhs[0] / b
    for i in range(1, n):
        b = diag[i] - shift - off[i - 1] * cp[i - 1]
        if b == 0.0:
            b = tiny
        cp[i] = off[i] / b if i < n - 1 else 0.0
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / b
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def fd_eigenvector(profile: CelerityProfile, mu: float, lambda_hat: float, N: int,
                   disc: FdDiscretization | None = None, gap: float = 1e-8):
    """Inverse-iteration eigenvector, sum(h x^2) = 1 and x[0] > 0.

    Returns (y, x) at the interior nodes.
    """
    disc = disc or discretize(profile, mu, N)
    # the window cannot be narrower than the rounding level of the Sturm count
    w = max(gap, 10 * _tolerances(disc)[0])
    if sturm_count(disc, lambda_hat + w) - sturm_count(disc, lambda_hat - w) != 1:
        raise ClusterUnresolved(f"no isolated eigenvalue within {w} of {lambda_hat}")
    # deterministic start vector with no special symmetry
    x = np.cos(np.arange(disc.N) * 0.7548776662466927) + 1.5
    for _ in range(4):
        x = _thomas(disc.diag, disc.off, float(lambda_hat), x)
        x /= np.linalg.norm(x)
    x /= math.sqrt(disc.h * float(x @ x))
    if x[0] < 0:
        x = -x
    return disc.y, x


def richardson(profile: CelerityProfile, mu: float, num_eigs: int, N: int) -> np.ndarray:
    """Second-order extrapolation (4 lam_{2N+1} - lam_N)/3 with h halved exactly."""
    coarse = fd_spectrum(profile, mu, num_eigs, N)
    fine = fd_spectrum(profile, mu, num_eigs, 2 * N + 1)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class CompareReport:
    rel_errors: np.ndarray
    rel_tol: float
    worst_index: int
    worst_error: float

    @property
    def passed(self) -> bool:
        return bool(self.worst_error <= self.rel_tol)

    def lines(self) -> list[str]:
        out = ["index,solver_rel_error"]
        out += [f"{i + 1},{e:.12g}" for i, e in enumerate(self.rel_errors)]
        out.append(f"worst_index,{self.worst_index + 1}")
        out.append(f"worst_error,{self.worst_error:.12g}")
        out.append(f"rel_tol,{self.rel_tol:.12g}")
        out.append(f"status,{'pass' if self.passed else 'fail'}")
        return out


def compare(solver_lambdas, oracle_lambdas, rel_tol: float) -> CompareReport:
    a = np.asarray(solver_lambdas, dtype=float)
    b = np.asarray(oracle_lambdas, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.size} solver values vs {b.size} oracle values")
    if a.size == 0:
        return CompareReport(a, rel_tol, 0, 0.0)
    err = np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)
    worst = int(np.argmax(err))
    return CompareReport(err, float(rel_tol), worst, float(err[worst]))
