"""Quantitative diagnostics for fiber eigenpairs.

Layer masses, concentration ratios, Pruefer amplitudes along arches,
piecewise-constant amplitude envelopes, zero gaps, mass floors for
non-guided families and decay fits for guided families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BadLayer,
    EmptyFamily,
    LayerIntersectsWell,
    NotInSector,
)
from .fiber import FiberEigenpair, as_piecewise_constant, eigenpair
from .profile import CelerityProfile, WellInterval, find_well
from .spectral_grid import GUIDED, NONGUIDED, CrossSection, enumerate_spectrum, extend_modes

__all__ = [
    "Layer",
    "layer_mass",
    "concentration_ratio",
    "AmplitudeTrace",
    "amplitude_trace",
    "minimal_amplitude",
    "zero_gap_bound",
    "AmplitudeRatios",
    "amplitude_ratios",
    "MassFloorResult",
    "mass_floor_check",
    "DecayResult",
    "guided_decay_check",
    "lambda_tilde0",
    "in_amplitude_regime",
    "DiagnosticsRow",
    "DiagnosticsReport",
    "diagnose",
]

PASS = "Pass"
FAIL = "Fail"
SKIPPED = "SkippedSmallLambda"


# ---------------------------------------------------------------------------
# masses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Layer:
    """Slab a < y < b, optionally restricted to a cross-section window."""

    a: float
    b: float
    window: tuple[tuple[float, float], ...] | None = None

    def check(self, H: float) -> None:
        if not (0.0 <= self.a < self.b <= H):
            raise BadLayer(f"layer ({self.a}, {self.b}) not inside (0, {H})")


def layer_mass(pair: FiberEigenpair, a: float, b: float) -> float:
    """Integral of u^2 over (a, b)."""
    Layer(a, b).check(pair.profile.H)
    return pair.integral(a, b)


def concentration_ratio(pair: FiberEigenpair, cross: CrossSection, k: int, layer: Layer) -> float:
    """R_omega for omega = window x (a, b) and the mode phi_k u."""
    layer.check(pair.profile.H)
    frac = 1.0
    if layer.window is not None:
        if len(layer.window) != len(cross.lengths):
            raise BadLayer("window dimension does not match the cross-section")
        for (lo, hi), L in zip(layer.window, cross.lengths):
            if not (0.0 <= lo < hi <= L):
                raise BadLayer(f"window ({lo}, {hi}) not inside (0, {L})")
        frac = cross.window_fraction(k, layer.window)
    return float(min(1.0, max(0.0, frac * layer_mass(pair, layer.a, layer.b))))


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeTrace:
    zeros: np.ndarray           # z_0 = 0 < ... < z_s = H
    arch_points: np.ndarray     # z_{i+1/2}
    arch_values: np.ndarray     # u(z_{i+1/2})
    zero_flux: np.ndarray       # c u' at the zeros
    ys: np.ndarray              # candidate points for the minimum
    r2: np.ndarray              # u^2 + (c u')^2 there
    min_r2: float
    argmin: float

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.zeros)

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())

    @property
    def n_arches(self) -> int:
        return self.arch_points.size


def _resonance_points(profile: CelerityProfile, pair: FiberEigenpair) -> np.ndarray:
    """Roots of 1/c - (lam - c mu^2), where d(r^2)/dy may vanish off the phase axes."""
    if profile.is_piecewise_constant:
        return np.empty(0)
    mu2 = pair.mu**2
    g = lambda y: 1.0 / profile.evaluate(y) - (pair.lam - profile.evaluate(y) * mu2)  # noqa: E731
    ys = pair.grid
    gv = g(ys)
    idx = np.flatnonzero(np.sign(gv[:-1]) * np.sign(gv[1:]) < 0)
    return np.array([brentq(g, ys[i], ys[i + 1], xtol=1e-14) for i in idx])


def amplitude_trace(profile: CelerityProfile, pair: FiberEigenpair) -> AmplitudeTrace:
    H = profile.H
    zeros = np.concatenate(([0.0], pair.zeros, [H]))
    fz = pair.flux_zeros
    fz_u = pair.state_at(fz)[0] if fz.size else np.empty(0)
    arch_pts, arch_vals = [], []
    for z0, z1 in zip(zeros[:-1], zeros[1:]):
        inside = (fz > z0) & (fz < z1)
        if inside.any():
            j = np.flatnonzero(inside)[np.argmax(np.abs(fz_u[inside]))]
            arch_pts.append(fz[j])
            arch_vals.append(fz_u[j])
        else:
            m = (pair.grid > z0) & (pair.grid < z1)
            j = np.flatnonzero(m)[np.argmax(np.abs(pair.u[m]))]
            arch_pts.append(pair.grid[j])
            arch_vals.append(pair.u[j])
    cand = np.unique(np.concatenate((pair.grid, zeros, fz, profile.knots, _resonance_points(profile, pair))))
    u, f, _ = pair.state_at(cand)
    r2 = u * u + f * f
    i = int(np.argmin(r2))
    zero_flux = pair.state_at(zeros)[1]
    return AmplitudeTrace(zeros, np.array(arch_pts), np.array(arch_vals), zero_flux,
                          cand, r2, float(r2[i]), float(cand[i]))


def _check_nonguided(profile: CelerityProfile, pair: FiberEigenpair, eps: float) -> None:
    if pair.lam < (profile.c_max + eps) * pair.mu**2:
        raise NotInSector(f"lam={pair.lam} below (c_M + eps) mu^2 at mu={pair.mu}")


def minimal_amplitude(profile: CelerityProfile, eps: float, family) -> float:
    """Family infimum of min_r2 (an estimate restricted to the computed family)."""
    family = list(family)
    if not family:
        raise EmptyFamily("no eigenpairs supplied")
    vals = []
    for pair in family:
        _check_nonguided(profile, pair, eps)
        vals.append(amplitude_trace(profile, pair).min_r2)
    return float(min(vals))


def zero_gap_bound(profile: CelerityProfile, mu: float, eps: float) -> float:
    """pi c_M / (mu sqrt(c_m eps)): comparison bound on consecutive zero spacing."""
    return math.pi * profile.c_max / (mu * math.sqrt(profile.c_min * eps))


def in_amplitude_regime(profile: CelerityProfile, pair: FiberEigenpair) -> bool:
    """True when c mu^2 p > 1 everywhere (p = lam/mu^2 - c).

    Then r^2 has its minima at arch extrema and its maxima at zeros.
    """
    ys = profile.dense_sample(2000)
    c = profile.evaluate(ys)
    return bool(np.min(c * (pair.lam - c * pair.mu**2)) > 1.0)


def lambda_tilde0(profile: CelerityProfile, family) -> float:
    """Smallest lam in the family for which :func:`in_amplitude_regime` holds."""
    lams = [p.lam for p in family if in_amplitude_regime(profile, p)]
    return float(min(lams)) if lams else math.inf


# ---------------------------------------------------------------------------
# piecewise-constant envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeRatios:
    beta2: np.ndarray
    max_ratio: float
    kappa: float
    tv: float
    envelope: float          # exp(2 kappa V)
    floor: float             # 1 / (H exp(kappa V))
    identity_residuals: np.ndarray   # relative, one per interface
    mirror_residuals: np.ndarray

    @property
    def within_envelope(self) -> bool:
        return bool(self.max_ratio <= self.envelope)

    @property
    def above_floor(self) -> bool:
        return bool(self.beta2.max() >= self.floor)


def amplitude_ratios(profile: CelerityProfile, pair: FiberEigenpair, eps: float) -> AmplitudeRatios:
    """Per-piece sinusoid amplitudes beta_j^2 = u^2 + (c u')^2 / (c_j mu^2 p_j)."""
    pc = as_piecewise_constant(profile)
    mu2 = pair.mu**2
    p = pair.lam / mu2 - pc.values
    if np.any(p < eps * (1 - 1e-12)):
        raise NotInSector(f"p_j = lam/mu^2 - c_j must be >= eps={eps}; min is {p.min()}")
    P = pc.values * mu2 * p
    mids = 0.5 * (pc.breakpoints[:-1] + pc.breakpoints[1:])
    u, f, _ = pair.state_at(mids)
    beta2 = u * u + f * f / P
    kappa = (1.0 / pc.c_min) * max(1.0, (pc.c_max - eps) / eps)
    V = pc.tv
    # interface identities, evaluated with the state at each interior breakpoint
    ui, fi, _ = pair.state_at(pc.breakpoints[1:-1])
    cosB2 = fi * fi / (P[1:] * beta2[1:])
    cosA2 = fi * fi / (P[:-1] * beta2[:-1])
    pred_left = beta2[1:] * (1 + (P[1:] / P[:-1] - 1) * cosB2)
    pred_right = beta2[:-1] * (1 + (P[:-1] / P[1:] - 1) * cosA2)
    res = np.abs(pred_left - beta2[:-1]) / beta2[:-1]
    res_m = np.abs(pred_right - beta2[1:]) / beta2[1:]
    return AmplitudeRatios(
        beta2=beta2,
        max_ratio=float(beta2.max() / beta2.min()),
        kappa=kappa,
        tv=V,
        envelope=math.exp(2 * kappa * V),
        floor=1.0 / (pc.H * math.exp(kappa * V)),
        identity_residuals=res,
        mirror_residuals=res_m,
    )


# ---------------------------------------------------------------------------
# family checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MassFloorResult:
    lam: np.ndarray
    mass: np.ndarray
    floor: np.ndarray
    status: tuple[str, ...]
    lambda0: float
    lambda0_by_mu: dict = field(default_factory=dict)

    @property
    def checked(self) -> np.ndarray:
        return np.array([s != SKIPPED for s in self.status])

    @property
    def violations(self) -> int:
        return sum(s == FAIL for s in self.status)

    @property
    def worst_ratio(self) -> float:
        m = self.checked
        if not m.any():
            return math.nan
        return float(np.min(self.mass[m] / self.floor[m]))


def _layer_gap(zeros: np.ndarray, a: float, b: float) -> float:
    """Longest zero gap among arches that intersect (a, b)."""
    meets = (zeros[1:] > a) & (zeros[:-1] < b)
    return float(np.diff(zeros)[meets].max(initial=0.0))


def mass_floor_check(profile: CelerityProfile, eps: float, family, a: float, b: float) -> MassFloorResult:
    """Compare layer masses with the per-arch floor (c_m / (3 c_M)) min_r2 (covered length)."""
    family = list(family)
    if not family:
        raise EmptyFamily("no eigenpairs supplied")
    Layer(a, b).check(profile.H)
    for pair in family:
        _check_nonguided(profile, pair, eps)
    traces = [amplitude_trace(profile, p) for p in family]
    lams = np.array([p.lam for p in family])
    # below lambda0 some arch meeting the layer is longer than half of it, so a complete arch is not guaranteed
    # lambda0 is taken per fiber, since arch lengths shrink with ell only along a fixed mu
    small = np.array([_layer_gap(tr.zeros, a, b) > 0.5 * (b - a) for tr in traces])
    mus = np.array([p.mu for p in family])
    lambda0_by_mu = {}
    for m in np.unique(mus):
        sel = small & (mus == m)
        lambda0_by_mu[float(m)] = float(lams[sel].max()) if sel.any() else 0.0
    lambda0 = max(lambda0_by_mu.values())
    const = profile.c_min / (3.0 * profile.c_max)
    masses, floors, status = [], [], []
    for pair, lam, tr in zip(family, lams, traces):
        mass = layer_mass(pair, a, b)
        z = tr.zeros
        full = (z[:-1] >= a) & (z[1:] <= b)
        covered = float(np.sum(np.diff(z)[full]))
        floor = const * tr.min_r2 * covered
        masses.append(mass)
        floors.append(floor)
        if lam <= lambda0_by_mu[float(pair.mu)] or covered == 0.0:
            status.append(SKIPPED)
        else:
            status.append(PASS if mass >= floor else FAIL)
    return MassFloorResult(lams, np.array(masses), np.array(floors), tuple(status), lambda0, lambda0_by_mu)


@dataclass(frozen=True)
class DecayResult:
    mu: np.ndarray
    lam: np.ndarray
    mass: np.ndarray
    slope: float
    gamma: float
    envelope: np.ndarray
    s: float = 0.75
    tail_below_envelope: bool = field(default=True)


def guided_decay_check(profile: CelerityProfile, well: WellInterval | None, family, a: float, b: float,
                       eps: float, s: float = 0.75) -> DecayResult:
    """Outer-layer masses along a guided family and their log-log slope in mu."""
    if well is None:
        raise LayerIntersectsWell("profile has no well; the decay check needs one")
    Layer(a, b).check(profile.H)
    if a > well.beta:
        dist = a - well.beta
    elif b < well.alpha:
        dist = well.alpha - b
    else:
        raise LayerIntersectsWell(f"layer ({a}, {b}) meets the well closure [{well.alpha}, {well.beta}]")
    family = sorted(family, key=lambda p: p.mu)
    if not family:
        raise EmptyFamily("no guided eigenpairs supplied")
    mus = np.array([p.mu for p in family])
    lams = np.array([p.lam for p in family])
    for mu, lam in zip(mus, lams):
        if not (profile.c_min * mu**2 <= lam <= (well.c1 - eps) * mu**2):
            raise NotInSector(f"lam={lam} is not guided at mu={mu}")
    mass = np.array([layer_mass(p, a, b) for p in family])
    slope = float(np.polyfit(np.log(mus), np.log(mass), 1)[0]) if mus.size > 1 else math.nan
    xiM2 = profile.c_max * mus**2 - lams
    xi12 = mus**2 - lams / well.c1
    shape = (1 + xiM2) ** s / (dist * xi12)
    half = max(1, mus.size // 2)
    gamma = float(np.max(mass[:half] / shape[:half]))
    env = gamma * shape
    tail_ok = bool(np.all(mass[half:] <= env[half:] * (1 + 1e-12)))
    return DecayResult(mus, lams, mass, slope, gamma, env, s, tail_ok)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRow:
    k: int
    mu: float
    ell: int
    lam: float
    sector: str
    mass: float
    R_omega: float
    min_r2: float
    max_gap: float


@dataclass(frozen=True)
class DiagnosticsReport:
    rows: list[DiagnosticsRow]
    summary: dict[str, float]

    HEADER = ("k", "mu", "ell", "lambda", "sector", "mass", "R_omega", "min_r2", "max_gap")


def diagnose(profile: CelerityProfile, cross: CrossSection, lambda_max: float, eps: float,
             layer: Layer, c1: float | None = None, grid=None) -> DiagnosticsReport:
    """Enumerate the spectrum up to lambda_max and compute per-eigenpair diagnostics."""
    layer.check(profile.H)
    well = find_well(profile, c1) if c1 is not None else None
    cross = extend_modes(profile, cross, lambda_max)
    spectrum = enumerate_spectrum(profile, cross, lambda_max, eps, well)
    rows, nonguided, guided_first = [], [], {}
    traces = {}
    for r in spectrum:
        pair = eigenpair(profile, r.mu, r.ell, grid)
        tr = amplitude_trace(profile, pair)
        traces[id(pair)] = tr
        rows.append(DiagnosticsRow(
            r.k, r.mu, r.ell, r.lam, str(r.sector), layer_mass(pair, layer.a, layer.b),
            concentration_ratio(pair, cross, r.k, layer), tr.min_r2, tr.max_gap,
        ))
        if r.sector.tag == NONGUIDED:
            nonguided.append(pair)
        elif r.sector.tag == GUIDED and r.k not in guided_first:
            guided_first[r.k] = pair
    summary: dict[str, float] = {
        "eigenpairs": float(len(rows)),
        "nonguided_count": float(len(nonguided)),
        "guided_count": float(sum(r.sector == GUIDED for r in rows)),
    }
    if nonguided:
        summary["nonguided_family_inf_min_r2"] = min(traces[id(p)].min_r2 for p in nonguided)
        summary["nonguided_family_inf_mass"] = min(
            r.mass for r in rows if r.sector == NONGUIDED
        )
        summary["max_gap_over_bound"] = max(
            traces[id(p)].max_gap / zero_gap_bound(profile, p.mu, eps) for p in nonguided
        )
        mf = mass_floor_check(profile, eps, nonguided, layer.a, layer.b)
        summary["mass_floor_lambda0"] = mf.lambda0
        summary["mass_floor_worst_ratio"] = mf.worst_ratio
        summary["mass_floor_violations"] = float(mf.violations)
    if well is not None and guided_first and (layer.a > well.beta or layer.b < well.alpha):
        dec = guided_decay_check(profile, well, guided_first.values(), layer.a, layer.b, eps)
        summary["guided_decay_slope"] = dec.slope
        summary["guided_decay_gamma"] = dec.gamma
    return DiagnosticsReport(rows, summary)
