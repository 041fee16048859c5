import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerspec.errors import UnsupportedCrossSection
from layerspec.fiber import eigenvalue, theta_at_H
from layerspec.oracle import fd_spectrum
from layerspec.profile import PiecewiseConstant, find_well
from layerspec.spectral_grid import (
    GUIDED,
    NONGUIDED,
    RESIDUAL,
    classify,
    cross_section_modes,
    enumerate_spectrum,
    extend_modes,
    first_nonguided_index,
    parse_cross_section,
    spectrum_csv_rows,
)

from suites import random_pc

PI = math.pi
UNIT = PiecewiseConstant([0.0, PI], [1.0])
WELL = PiecewiseConstant([0, 1, 2, 3], [4.0, 1.0, 4.0])


# cross-sections ---------------------------------------------------------------------


def test_interval_modes():
    assert np.allclose(cross_section_modes(("interval", PI), 3).mu, [1, 2, 3], rtol=1e-15)
    assert cross_section_modes(("interval", 1.0), 1).mu[0] == pytest.approx(PI, rel=1e-15)


def test_box_modes_with_multiplicity():
    cs = cross_section_modes(("box", (PI, PI)), 4)
    assert np.allclose(cs.mu2, [2, 5, 5, 8], rtol=1e-14)
    assert sorted(cs.indices[1:3]) == [(1, 2), (2, 1)]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.3, 4.0), min_size=2, max_size=3), st.integers(1, 25))
def test_box_modes_match_brute_force(lengths, K):
    cs = cross_section_modes(("box", tuple(lengths)), K)
    brute = sorted(
        sum((n * PI / L) ** 2 for n, L in zip(idx, lengths))
        for idx in itertools.product(range(1, K + 2), repeat=len(lengths))
    )[:K]
    assert np.all(np.diff(cs.mu2) >= 0)
    assert np.allclose(cs.mu2, brute, rtol=1e-13)


def test_parse_cross_section():
    assert parse_cross_section("interval:pi") == ("interval", (PI,))
    assert parse_cross_section("box:pi,2") == ("box", (PI, 2.0))
    assert parse_cross_section("interval:2pi") == ("interval", (2 * PI,))
    for bad in ("disk:1", "interval", "interval:-1", "box:1,x"):
        with pytest.raises(UnsupportedCrossSection):
            parse_cross_section(bad)


def test_window_fraction_half_interval():
    cs = cross_section_modes(("interval", PI), 5)
    for k in range(1, 6):
        assert cs.window_fraction(k, ((0.0, PI / 2),)) == pytest.approx(0.5, abs=1e-15)
        assert cs.window_fraction(k, ((0.0, PI),)) == pytest.approx(1.0, abs=1e-15)


# classification ---------------------------------------------------------------------


def test_classify_examples():
    assert classify(UNIT, 1.0, 2.0, 0.5).tag == NONGUIDED
    well = find_well(WELL, 4.0)
    assert classify(WELL, 10.0, 200.0, 0.5, well).tag == GUIDED
    assert classify(WELL, 10.0, 420.0, 0.5, well).tag == RESIDUAL


def test_classify_boundaries_are_closed():
    well = find_well(WELL, 4.0)
    assert classify(WELL, 10.0, 450.0, 0.5, well).tag == NONGUIDED
    assert classify(WELL, 10.0, 350.0, 0.5, well).tag == GUIDED
    assert classify(WELL, 10.0, 100.0, 0.5, well).tag == GUIDED
    assert classify(WELL, 10.0, 99.99, 0.5, well).tag == RESIDUAL
    # no well: nothing is guided
    assert classify(WELL, 10.0, 200.0, 0.5).tag == RESIDUAL


def test_classify_labels_carry_parameters():
    lab = classify(UNIT, 1.0, 2.0, 0.5)
    assert lab.eps == 0.5 and lab.ell0 == 1 and str(lab) == NONGUIDED


# enumeration ------------------------------------------------------------------------


def test_enumerate_constant_table():
    rows = enumerate_spectrum(UNIT, cross_section_modes(("interval", PI), 1), 9.0)
    got = [(r.k, r.ell, round(r.lam, 9)) for r in rows]
    assert got == [(1, 1, 2.0), (1, 2, 5.0), (2, 1, 5.0), (2, 2, 8.0)]
    assert all(r.sector is None for r in rows)


def test_enumerate_constant_sectors():
    rows = enumerate_spectrum(UNIT, cross_section_modes(("interval", PI), 1), 9.0, eps=0.5)
    tags = {(r.k, r.ell): r.sector.tag for r in rows}
    # (k, ell) = (2, 1) has lam = 5 < (1 + 0.5) * 4 = 6
    assert tags == {(1, 1): NONGUIDED, (1, 2): NONGUIDED, (2, 1): RESIDUAL, (2, 2): NONGUIDED}


def test_enumerate_counts_match_fd():
    p = PiecewiseConstant([0.0, 1.0, 2.0], [1.0, 4.0])
    rows = enumerate_spectrum(p, cross_section_modes(("interval", PI), 1), 60.0)
    for k in sorted({r.k for r in rows}):
        fd = fd_spectrum(p, float(k), 40, 8192)
        assert sum(r.k == k for r in rows) == int(np.sum(fd <= 60.0))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_enumerate_completeness_and_order(seed):
    rng = np.random.default_rng(seed)
    p = random_pc(rng, 5, 0.5, 5.0, 6.0)
    lmax = float(rng.uniform(20.0, 120.0))
    cross = cross_section_modes(("interval", PI), 1)
    rows = enumerate_spectrum(p, cross, lmax, eps=0.5)
    keys = [(r.lam, r.k) for r in rows]
    assert keys == sorted(keys)
    for k, mu in enumerate(extend_modes(p, cross, lmax).mu, start=1):
        if p.c_min * mu * mu > lmax:
            break
        n = math.floor(theta_at_H(p, mu, lmax) / PI)
        assert sum(r.k == k for r in rows) == n


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_ell0_minimality(seed):
    rng = np.random.default_rng(seed)
    p = random_pc(rng, 5, 0.5, 5.0, 6.0)
    mu = float(rng.uniform(0.5, 4.0))
    eps = 0.5
    ell0 = first_nonguided_index(p, mu, eps)
    thr = (p.c_max + eps) * mu * mu
    assert eigenvalue(p, mu, ell0) >= thr
    if ell0 > 1:
        assert eigenvalue(p, mu, ell0 - 1) < thr


def test_guided_sector_nonempty_for_well():
    well = find_well(WELL, 4.0)
    cross = cross_section_modes(("interval", PI), 20)
    for k, mu in enumerate(cross.mu, start=1):
        if k == 1:
            continue
        lam = eigenvalue(WELL, mu, 1)
        assert classify(WELL, mu, lam, 0.5, well).tag == GUIDED


def test_csv_rows():
    rows = enumerate_spectrum(UNIT, cross_section_modes(("interval", PI), 1), 9.0, eps=0.5)
    out = spectrum_csv_rows(rows)
    assert out[0][:3] == [1, 1.0, 1] and out[0][4] == NONGUIDED
