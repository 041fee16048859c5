"""Piecewise-constant approximation of BV profiles and eigenpair convergence ladders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fiber import eigenfunction, eigenvalue
from .profile import CelerityProfile, PiecewiseConstant

__all__ = [
    "approximate_pc",
    "ApproximationLadder",
    "build_ladder",
    "sup_error",
    "LadderRow",
    "eigenpair_convergence",
    "ladder_csv_rows",
]


def approximate_pc(profile: CelerityProfile, n_pieces: int) -> PiecewiseConstant:
    """Uniform partition, each piece valued at its left endpoint."""
    n = int(n_pieces)
    if n < 1:
        raise ValueError("n_pieces must be >= 1")
    bp = np.linspace(0.0, profile.H, n + 1)
    return PiecewiseConstant(bp, profile.evaluate(bp[:-1]))


def sup_error(profile: CelerityProfile, approx: CelerityProfile, n_samples: int | None = None) -> float:
    """max |c_n - c| over a dense sample, including left limits at all knots."""
    ys = np.union1d(profile.dense_sample(n_samples), approx.knots)
    err = np.abs(approx.evaluate(ys) - profile.evaluate(ys))
    err_left = np.abs(approx.evaluate(ys, "left") - profile.evaluate(ys, "left"))
    return float(max(err.max(), err_left.max()))


@dataclass(frozen=True)
class ApproximationLadder:
    target: CelerityProfile
    ns: tuple[int, ...]
    approximants: tuple[PiecewiseConstant, ...]
    sup_errors: np.ndarray
    tvs: np.ndarray


def build_ladder(profile: CelerityProfile, ns) -> ApproximationLadder:
    ns = tuple(int(n) for n in ns)
    approx = tuple(approximate_pc(profile, n) for n in ns)
    return ApproximationLadder(
        profile, ns, approx,
        np.array([sup_error(profile, a) for a in approx]),
        np.array([a.tv for a in approx]),
    )


@dataclass(frozen=True)
class LadderRow:
    n: int
    lambda_n: float
    err_lambda: float
    err_u_sup: float
    err_flux_sup: float


def eigenpair_convergence(profile: CelerityProfile, mu: float, ell: int, ns, grid_cells: int | None = None
                          ) -> list[LadderRow]:
    """Re-solve each approximant for the same index ell and measure sup-errors.

    Errors are taken on a common grid that contains every approximant
    breakpoint; the sign convention u'(0) > 0 is shared by construction.
    """
    ns = tuple(int(n) for n in ns)
    lam = eigenvalue(profile, mu, ell)
    cells = grid_cells or max(2048, *(8 * n for n in ns))
    lcm = int(np.lcm.reduce(np.array(ns, dtype=np.int64)))
    cells = int(np.ceil(cells / lcm) * lcm)
    grid = np.linspace(0.0, profile.H, cells + 1)
    ref = eigenfunction(profile, mu, lam, grid, ell=ell)
    rows = []
    for n in ns:
        pc = approximate_pc(profile, n)
        lam_n = eigenvalue(pc, mu, ell)
        pair = eigenfunction(pc, mu, lam_n, ref.grid, ell=ell)
        rows.append(LadderRow(
            n, lam_n, abs(lam_n - lam),
            float(np.max(np.abs(pair.u - ref.u))),
            float(np.max(np.abs(pair.flux - ref.flux))),
        ))
    return rows


def ladder_csv_rows(rows: list[LadderRow]) -> list[list]:
    return [[r.n, r.lambda_n, r.err_lambda, r.err_u_sup, r.err_flux_sup] for r in rows]
