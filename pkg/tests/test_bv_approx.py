import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerspec.bv_approx import (
    approximate_pc,
    build_ladder,
    eigenpair_convergence,
    ladder_csv_rows,
    sup_error,
)
from layerspec.profile import AnalyticPreset, PiecewiseConstant, SampledGrid


@st.composite
def sampled_grids(draw):
    n = draw(st.integers(2, 25))
    steps = draw(st.lists(st.floats(0.02, 1.0), min_size=n - 1, max_size=n - 1))
    ys = np.concatenate(([0.0], np.cumsum(steps)))
    cs = draw(st.lists(st.floats(0.2, 8.0), min_size=n, max_size=n))
    interp = draw(st.sampled_from(["linear", "step"]))
    return SampledGrid(ys, cs, interp)


def test_constant_target_reproduced():
    c = PiecewiseConstant([0, 2.0], [3.0])
    for n in (1, 4, 17):
        a = approximate_pc(c, n)
        assert np.all(a.values == 3.0) and a.n_pieces == n
        assert sup_error(c, a) == 0.0


def test_ramp_two_pieces():
    a = approximate_pc(AnalyticPreset("linear-ramp", (1.0, 2.0), 1.0), 2)
    assert np.allclose(a.values, [1.0, 1.5]) and a.tv == pytest.approx(0.5)


def test_commensurate_pc_target_exact():
    target = PiecewiseConstant([0, 0.5, 1.5, 2.0], [2.0, 1.0, 3.0])
    a = approximate_pc(target, 8)
    assert sup_error(target, a) == 0.0


def test_rejects_zero_pieces():
    with pytest.raises(ValueError):
        approximate_pc(PiecewiseConstant([0, 1], [1.0]), 0)


@settings(max_examples=100, deadline=None)
@given(sampled_grids(), st.integers(1, 300))
def test_tv_and_range_preserved(g, n):
    a = approximate_pc(g, n)
    assert a.tv <= g.tv * (1 + 1e-12) + 1e-12
    assert g.c_min <= a.c_min and a.c_max <= g.c_max


@settings(max_examples=15, deadline=None)
@given(sampled_grids().filter(lambda g: g.interp == "linear"))
def test_linear_targets_lipschitz_bound(g):
    lad = build_ladder(g, [16, 64, 256, 1024])
    assert np.all(lad.tvs <= g.tv * (1 + 1e-12) + 1e-12)
    lip = np.max(np.abs(np.diff(g.cs) / np.diff(g.ys)))
    assert np.all(lad.sup_errors <= lip * g.H / np.array(lad.ns) * (1 + 1e-9))


@settings(max_examples=15, deadline=None)
@given(sampled_grids())
def test_monotone_targets_error_nonincreasing(g):
    # nested partitions of a monotone target can only shrink each piece's oscillation
    mono = SampledGrid(g.ys, np.sort(g.cs), g.interp)
    lad = build_ladder(mono, [4, 16, 64, 256])
    assert np.all(np.diff(lad.sup_errors) <= 1e-12)


def test_convergence_ladder_ramp():
    ramp = AnalyticPreset("linear-ramp", (1.0, 2.0), 1.0)
    rows = eigenpair_convergence(ramp, 2.0, 3, [4, 16, 64, 256])
    err = np.array([r.err_lambda for r in rows])
    assert np.all(np.diff(err) < 0)
    assert err[-1] < 0.1 * err[0]
    assert np.all(np.diff([r.err_u_sup for r in rows]) < 0)
    assert np.all(np.diff([r.err_flux_sup for r in rows]) < 0)


def test_convergence_constant_target_zero_error():
    c = AnalyticPreset("constant", (2.0,), math.pi)
    rows = eigenpair_convergence(c, 1.0, 2, [2, 8])
    for r in rows:
        assert r.err_lambda <= 1e-9 * r.lambda_n
        assert r.err_u_sup <= 1e-7 and r.err_flux_sup <= 1e-7


def test_ladder_csv_rows():
    c = PiecewiseConstant([0, 1.0], [1.0])
    rows = eigenpair_convergence(c, 1.0, 1, [2])
    assert ladder_csv_rows(rows)[0][0] == 2
