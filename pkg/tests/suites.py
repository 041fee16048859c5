"""Deterministic problem families shared by the unit and acceptance tests."""

from __future__ import annotations

import math

import numpy as np

from layerspec.profile import AnalyticPreset, PiecewiseConstant


def random_pc(rng: np.random.Generator, max_pieces: int, lo: float, hi: float, tv_max: float,
              H: float = math.pi, min_pieces: int = 1) -> PiecewiseConstant:
    """Rejection-sample a PC profile with at most ``max_pieces`` pieces and TV <= tv_max."""
    while True:
        m = int(rng.integers(min_pieces, max_pieces + 1))
        vals = rng.uniform(lo, hi, m)
        if np.abs(np.diff(vals)).sum() > tv_max:
            continue
        inner = np.sort(rng.uniform(0.0, H, m - 1))
        bp = np.concatenate(([0.0], inner, [H]))
        if m > 1 and np.min(np.diff(bp)) < 1e-3 * H:
            continue
        return PiecewiseConstant(bp, vals)


def suite1_cases(n: int = 50, seed: int = 1):
    """Constant profiles: (profile, mu, ell, method, exact lam, H); half exact-PC, half RK."""
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n):
        c = float(rng.uniform(0.5, 5.0))
        H = float(rng.uniform(1.0, 4.0))
        mu = float(rng.uniform(0.5, 6.0))
        ell = int(rng.integers(1, 9))
        if i % 2 == 0:
            prof, method = PiecewiseConstant([0.0, H], [c]), "pc"
        else:
            prof, method = AnalyticPreset("constant", (c,), H), "rk"
        cases.append((prof, mu, ell, method, c * (mu * mu + (ell * math.pi / H) ** 2)))
    return cases


def suite2_profiles(n: int = 20, seed: int = 2):
    """Random PC profiles: at most 8 pieces, values in [0.5, 5], TV <= 6, H = pi."""
    rng = np.random.default_rng(seed)
    return [random_pc(rng, 8, 0.5, 5.0, 6.0) for _ in range(n)]


SUITE2_MUS = (1.0, 2.0, 3.0)   # interval cross-section of length pi, k = 1..3


def suite5_profiles(n: int = 10, seed: int = 5):
    """Bounded-variation family: 2-6 pieces, values in [0.5, 5], common TV <= 3."""
    rng = np.random.default_rng(seed)
    return [random_pc(rng, 6, 0.5, 5.0, 3.0, min_pieces=2) for _ in range(n)]


SUITE5_EPS = 0.5
