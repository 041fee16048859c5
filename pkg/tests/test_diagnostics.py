import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerspec.diagnostics import (
    SKIPPED,
    DiagnosticsReport,
    Layer,
    amplitude_ratios,
    amplitude_trace,
    concentration_ratio,
    diagnose,
    guided_decay_check,
    in_amplitude_regime,
    lambda_tilde0,
    layer_mass,
    mass_floor_check,
    minimal_amplitude,
    zero_gap_bound,
)
from layerspec.errors import (
    BadLayer,
    EmptyFamily,
    LayerIntersectsWell,
    NotInSector,
    NotPiecewiseConstant,
)
from layerspec.fiber import eigenfunction, eigenpair, eigenvalue, spectrum_in_range
from layerspec.oracle import fd_eigenvector, fd_spectrum
from layerspec.profile import AnalyticPreset, PiecewiseConstant, find_well
from layerspec.spectral_grid import cross_section_modes

from suites import random_pc

PI = math.pi
UNIT = PiecewiseConstant([0.0, PI], [1.0])
TWO_LAYER = PiecewiseConstant([0.0, 1.0, 2.0], [1.0, 4.0])
WELL = PiecewiseConstant([0, 1, 2, 3], [4.0, 1.0, 4.0])


def _nonguided(p, mu, eps, count):
    lo = (p.c_max + eps) * mu * mu
    out = []
    hi = lo + 20.0 * mu * mu
    while len(out) < count:
        out = spectrum_in_range(p, mu, lo * (1 - 1e-15), hi)
        hi *= 2
    return [eigenpair(p, mu, ell) for ell, _ in out[:count]]


# masses -----------------------------------------------------------------------------


@pytest.mark.parametrize("ell", [1, 2, 3, 7])
def test_layer_mass_half_interval(ell):
    pair = eigenpair(UNIT, 1.0, ell)
    assert layer_mass(pair, 0.0, PI / 2) == pytest.approx(0.5, abs=1e-9)
    assert layer_mass(pair, 0.0, PI) == pytest.approx(1.0, abs=1e-9)


def test_layer_mass_against_closed_form_partial_cells():
    pair = eigenpair(UNIT, 1.0, 3)
    a, b = 0.123456, 1.987654
    exact = (2 / PI) * ((b - a) / 2 - (math.sin(6 * b) - math.sin(6 * a)) / 12)
    assert layer_mass(pair, a, b) == pytest.approx(exact, rel=1e-8)


def test_layer_mass_two_layer_against_fd():
    pair = eigenpair(TWO_LAYER, 1.0, 1)
    N = 8191  # y = 1 is the node with index 4095
    y, v = fd_eigenvector(TWO_LAYER, 1.0, fd_spectrum(TWO_LAYER, 1.0, 1, N)[0], N)
    h = y[1] - y[0]
    nodes = np.concatenate(([0.0], v[y <= 1.0 + 1e-12]))
    fd_mass = h * (np.sum(nodes**2) - 0.5 * nodes[-1] ** 2)
    assert layer_mass(pair, 0.0, 1.0) == pytest.approx(fd_mass, abs=1e-3)


def test_bad_layer():
    pair = eigenpair(UNIT, 1.0, 1)
    for a, b in ((1.0, 0.5), (-0.1, 1.0), (0.0, 4.0)):
        with pytest.raises(BadLayer):
            layer_mass(pair, a, b)


def test_concentration_ratio_examples():
    cross = cross_section_modes(("interval", PI), 4)
    for k in (1, 3):
        pair = eigenpair(UNIT, float(k), 2)
        assert concentration_ratio(pair, cross, k, Layer(0.0, PI)) == pytest.approx(1.0, abs=1e-9)
        assert concentration_ratio(pair, cross, k, Layer(0.0, PI, ((0.0, PI),))) == pytest.approx(1.0, abs=1e-9)
        r = concentration_ratio(pair, cross, k, Layer(0.0, PI / 2, ((0.0, PI / 2),)))
        assert r == pytest.approx(0.25, abs=1e-9)
    with pytest.raises(BadLayer):
        concentration_ratio(pair, cross, 1, Layer(0.0, 1.0, ((0.0, 4.0),)))


# amplitude traces -------------------------------------------------------------------


def test_amplitude_trace_constant_closed_form():
    tr = amplitude_trace(UNIT, eigenpair(UNIT, 1.0, 3))
    assert np.allclose(tr.zeros, [0, PI / 3, 2 * PI / 3, PI], atol=1e-12)
    assert tr.min_r2 == pytest.approx(2 / PI, rel=1e-9)
    assert np.allclose(np.abs(tr.arch_values), math.sqrt(2 / PI), rtol=1e-9)
    assert np.allclose(tr.arch_points, [PI / 6, PI / 2, 5 * PI / 6], atol=1e-9)
    assert tr.n_arches == 3 and tr.max_gap == pytest.approx(PI / 3)


def test_arch_values_are_local_extrema():
    p = PiecewiseConstant([0, 0.9, 2.1, PI], [2.0, 0.7, 3.0])
    pair = eigenpair(p, 1.0, 6)
    tr = amplitude_trace(p, pair)
    for y, v in zip(tr.arch_points, tr.arch_values):
        near = pair.state_at(np.array([y - 1e-4, y + 1e-4]))[0]
        assert np.all(np.abs(near) <= abs(v) + 1e-12)


def test_guided_min_r2_collapses_along_family():
    vals = [amplitude_trace(WELL, eigenpair(WELL, float(k), 1)).min_r2 for k in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-6 * vals[0]
    # the non-guided family on the same profile stays bounded below
    ng = [amplitude_trace(WELL, p).min_r2 for p in _nonguided(WELL, 4.0, 0.5, 6)]
    assert min(ng) > 1e-2


def test_minimal_amplitude_constant_family():
    fam = [eigenpair(UNIT, 1.0, ell) for ell in range(1, 21)]
    assert minimal_amplitude(UNIT, 0.5, fam) == pytest.approx(2 / PI, rel=1e-9)


def test_minimal_amplitude_ramp_positive():
    ramp = AnalyticPreset("linear-ramp", (1.0, 2.0), 1.0)
    vals = []
    for mu in (1.0, 2.0, 4.0):
        for pair in _nonguided(ramp, mu, 0.5, 6):
            vals.append((pair.lam, amplitude_trace(ramp, pair).min_r2))
    vals.sort()
    lams, r2 = np.array(vals).T
    assert r2.min() > 0.05
    # no vanishing trend over the family
    assert r2[lams >= np.median(lams)].min() >= 0.5 * r2.min()


def test_minimal_amplitude_errors():
    with pytest.raises(EmptyFamily):
        minimal_amplitude(UNIT, 0.5, [])
    with pytest.raises(NotInSector):
        minimal_amplitude(WELL, 0.5, [eigenpair(WELL, 3.0, 1)])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_min_r2_above_beta_floor(seed):
    rng = np.random.default_rng(seed)
    p = random_pc(rng, 5, 0.5, 5.0, 3.0)
    eps, mu = 0.5, 1.0
    for pair in _nonguided(p, mu, eps, 4):
        ar = amplitude_ratios(p, pair, eps)
        # r^2 = beta_j^2 (sin^2 + c_j mu^2 p_j cos^2) on each piece
        lower = ar.beta2.min() * min(1.0, p.c_min * mu * mu * eps)
        assert amplitude_trace(p, pair).min_r2 >= lower * (1 - 1e-9)
        assert ar.beta2.min() >= ar.floor / ar.envelope


def test_arch_extremum_characterization_above_lambda_tilde0():
    p = PiecewiseConstant([0, 1.2, 2.0, PI], [1.5, 2.5, 1.0])
    fam = _nonguided(p, 2.0, 0.5, 8)
    lt0 = lambda_tilde0(p, fam)
    checked = 0
    for pair in fam:
        if pair.lam < lt0 or not in_amplitude_regime(p, pair):
            continue
        tr = amplitude_trace(p, pair)
        arch_min = float(np.min(tr.arch_values**2))
        assert tr.min_r2 == pytest.approx(arch_min, rel=1e-6)
        flux2 = tr.zero_flux**2
        assert np.all(np.minimum(flux2[:-1], flux2[1:]) >= tr.arch_values**2 * (1 - 1e-9))
        checked += 1
    assert checked >= 4


def test_zero_gap_bound_value():
    assert zero_gap_bound(WELL, 2.0, 0.5) == pytest.approx(PI * 4.0 / (2.0 * math.sqrt(0.5)))


# piecewise-constant amplitudes ------------------------------------------------------


def test_amplitude_ratios_trivial_cases():
    ar = amplitude_ratios(UNIT, eigenpair(UNIT, 1.0, 3), 0.5)
    assert ar.max_ratio == pytest.approx(1.0, abs=1e-12)
    flat = PiecewiseConstant([0, 1, PI], [1.0, 1.0])
    ar = amplitude_ratios(flat, eigenpair(flat, 1.0, 3), 0.5)
    assert ar.max_ratio == pytest.approx(1.0, abs=1e-12)
    assert np.all(ar.identity_residuals <= 1e-12)


def test_amplitude_ratios_two_layer():
    eps = 0.5
    for pair in _nonguided(TWO_LAYER, 1.0, eps, 6):
        ar = amplitude_ratios(TWO_LAYER, pair, eps)
        kappa = 1.0 * max(1.0, (4.0 - eps) / eps)
        assert ar.kappa == kappa
        assert ar.max_ratio <= math.exp(kappa * 3.0)
        assert ar.within_envelope and ar.above_floor
        assert np.all(ar.identity_residuals <= 1e-8)
        assert np.all(ar.mirror_residuals <= 1e-8)


def test_amplitude_ratio_identity_by_hand():
    eps, mu = 0.5, 1.0
    pair = _nonguided(TWO_LAYER, mu, eps, 1)[0]
    lam = pair.lam
    # piecewise sinusoids with u(0) = 0 and continuity of u, c u' at y = 1
    w1, w2 = math.sqrt(lam - 1.0), math.sqrt(lam / 4.0 - 1.0)
    u1, f1 = math.sin(w1), w1 * math.cos(w1)
    beta0 = 1.0
    beta1_sq = u1 * u1 + f1 * f1 / (4.0 * w2 * 4.0 * w2)
    ar = amplitude_ratios(TWO_LAYER, pair, eps)
    assert ar.beta2[1] / ar.beta2[0] == pytest.approx(beta1_sq / beta0, rel=1e-9)


def test_amplitude_ratio_errors():
    ramp = AnalyticPreset("linear-ramp", (1.0, 2.0), 1.0)
    with pytest.raises(NotPiecewiseConstant):
        amplitude_ratios(ramp, eigenpair(ramp, 1.0, 3), 0.5)
    with pytest.raises(NotInSector):
        amplitude_ratios(WELL, eigenpair(WELL, 3.0, 1), 0.5)


# family checks ----------------------------------------------------------------------


def test_mass_floor_constant_example():
    fam = [eigenpair(UNIT, 1.0, ell) for ell in range(4, 11)]
    res = mass_floor_check(UNIT, 0.5, fam, 0.0, PI / 2)
    assert res.violations == 0
    assert res.checked.sum() >= 1
    for m, f, s in zip(res.mass, res.floor, res.status):
        assert m == pytest.approx(0.5, abs=1e-9)
        if s != SKIPPED:
            assert 0 < f <= m


def test_mass_floor_skips_small_lambda():
    fam = [eigenpair(UNIT, 1.0, 1)]
    res = mass_floor_check(UNIT, 0.5, fam, 1.0, 1.5)
    assert res.status == (SKIPPED,)
    assert math.isnan(res.worst_ratio)


def test_mass_floor_errors():
    with pytest.raises(EmptyFamily):
        mass_floor_check(UNIT, 0.5, [], 0.0, 1.0)
    with pytest.raises(BadLayer):
        mass_floor_check(UNIT, 0.5, [eigenpair(UNIT, 1.0, 2)], 2.0, 1.0)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31))
def test_mass_at_least_arch_floor_random(seed):
    rng = np.random.default_rng(seed)
    p = random_pc(rng, 6, 0.5, 5.0, 6.0)
    a, b = sorted(rng.uniform(0.0, p.H, 2))
    const = p.c_min / (3 * p.c_max)
    for pair in _nonguided(p, float(rng.uniform(0.5, 2.5)), 0.5, 5):
        tr = amplitude_trace(p, pair)
        z = tr.zeros
        full = (z[:-1] >= a) & (z[1:] <= b)
        floor = const * tr.min_r2 * float(np.sum(np.diff(z)[full]))
        assert layer_mass(pair, a, b) >= floor


def test_guided_decay_errors():
    fam = [eigenpair(WELL, 3.0, 1)]
    well = find_well(WELL, 4.0)
    with pytest.raises(LayerIntersectsWell):
        guided_decay_check(UNIT, None, fam, 2.25, 3.0, 0.5)
    with pytest.raises(LayerIntersectsWell):
        guided_decay_check(WELL, well, fam, 1.5, 3.0, 0.5)
    with pytest.raises(EmptyFamily):
        guided_decay_check(WELL, well, [], 2.25, 3.0, 0.5)


def test_guided_decay_small_family():
    well = find_well(WELL, 4.0)
    fam = [eigenpair(WELL, float(k), 1) for k in range(2, 13)]
    res = guided_decay_check(WELL, well, fam, 2.25, 3.0, 0.5)
    assert np.all(np.diff(res.mass) < 0)
    assert res.slope < -0.4
    assert res.tail_below_envelope


def test_concentration_ratio_decreases_on_guided_family():
    cross = cross_section_modes(("interval", PI), 12)
    layer = Layer(2.25, 3.0, ((0.0, PI),))
    vals = [concentration_ratio(eigenpair(WELL, float(k), 1), cross, k, layer) for k in range(2, 13)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


# report -----------------------------------------------------------------------------


def test_diagnose_report():
    cross = cross_section_modes(("interval", PI), 1)
    rep = diagnose(WELL, cross, 150.0, 0.5, Layer(2.25, 3.0), c1=4.0)
    assert isinstance(rep, DiagnosticsReport)
    assert rep.summary["eigenpairs"] == len(rep.rows)
    assert rep.summary["guided_count"] >= 1 and rep.summary["nonguided_count"] >= 1
    assert rep.summary["max_gap_over_bound"] <= 1.0
    assert rep.summary["mass_floor_violations"] == 0
    assert "guided_decay_slope" in rep.summary
    for r in rep.rows:
        assert 0.0 <= r.R_omega <= 1.0 and 0.0 <= r.mass <= 1.0 + 1e-9 and r.min_r2 >= 0.0
