import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqcontrol.qcore import I2, SIGMA_X, SIGMA_Y, TrapSpec
from sqcontrol.selection import (
    DESIGNS,
    CatReadout,
    SelectionKind,
    cat_coefficients,
    design_eigen_anchored_pair,
    design_sigma_x_pair,
    design_sigma_y_pair,
    expected_shift,
    interference_factor,
    readout_curve,
    strong_limit,
    weak_limit,
    weak_value,
)
from sqcontrol.wavepacket import GridSpec, SpinGridWavePacket, conditional_translate, gaussian_ground_state

probs = st.floats(1e-4, 1.0, allow_nan=False)
ALL_KINDS = list(SelectionKind)


@settings(max_examples=60, deadline=None)
@given(probs, st.sampled_from(ALL_KINDS))
def test_overlap_squared_is_p(p, kind):
    pair = DESIGNS[kind](p)
    assert abs(pair.overlap) ** 2 == pytest.approx(p, abs=1e-12)
    assert np.linalg.norm(pair.i_state) == pytest.approx(1, abs=1e-14)
    assert np.linalg.norm(pair.f_state) == pytest.approx(1, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(probs)
def test_optimal_weak_values(p):
    wx = weak_value(design_sigma_x_pair(p), SIGMA_X)
    assert abs(wx - 1 / math.sqrt(p)) < 1e-12 * max(1, 1 / math.sqrt(p))
    ypair = design_sigma_y_pair(p)
    wy = weak_value(ypair, SIGMA_Y)
    assert abs(wy - 1 / math.sqrt(p)) < 1e-12 * max(1, 1 / math.sqrt(p))
    np.testing.assert_allclose(SIGMA_Y @ ypair.i_state, ypair.f_state, atol=1e-12)
    assert np.vdot(ypair.f_state, SIGMA_Y @ ypair.i_state) == pytest.approx(1, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(probs, st.sampled_from(ALL_KINDS))
def test_branch_coefficients_complete(p, kind):
    pair = DESIGNS[kind](p)
    cr = cat_coefficients(pair)
    assert abs(cr.c0 + cr.c1 - pair.overlap) < 1e-12


@pytest.mark.parametrize("design", [design_sigma_x_pair, design_sigma_y_pair, design_eigen_anchored_pair])
@pytest.mark.parametrize("p", [0.0, -0.1, 1.2])
def test_invalid_probability(design, p):
    with pytest.raises(ValueError, match="p must be in"):
        design(p)


def test_sigma_x_examples():
    pair = design_sigma_x_pair(1.0)
    plus = np.array([1, 1]) / math.sqrt(2)
    np.testing.assert_allclose(pair.i_state, plus, atol=1e-15)
    np.testing.assert_allclose(pair.f_state, plus, atol=1e-15)
    assert weak_value(pair, SIGMA_X) == pytest.approx(1)
    assert weak_value(design_sigma_x_pair(0.25), SIGMA_X) == pytest.approx(2, abs=1e-12)
    pair = design_sigma_x_pair(0.81)
    assert pair.overlap == pytest.approx(0.9, abs=1e-12)
    assert weak_value(pair, SIGMA_X) == pytest.approx(1 / 0.9, abs=1e-12)


def test_sigma_y_examples():
    assert weak_value(design_sigma_y_pair(1.0), SIGMA_Y) == pytest.approx(1, abs=1e-12)
    p = 0.9 ** (1 / 8)
    assert weak_value(design_sigma_y_pair(p), SIGMA_Y) == pytest.approx(0.9 ** (-1 / 16), abs=1e-12)


def test_eigen_anchored_examples():
    assert weak_value(design_eigen_anchored_pair(0.5), SIGMA_X) == pytest.approx(1, abs=1e-12)
    assert strong_limit(design_eigen_anchored_pair(0.5)) == pytest.approx(1, abs=1e-12)
    assert weak_value(design_eigen_anchored_pair(1.0), SIGMA_X) == pytest.approx(0, abs=1e-15)
    assert weak_value(design_eigen_anchored_pair(0.2), SIGMA_X) == pytest.approx(2, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(probs, st.sampled_from(ALL_KINDS))
def test_identity_weak_value(p, kind):
    assert weak_value(DESIGNS[kind](p), I2) == pytest.approx(1, abs=1e-12)


def test_orthogonal_selection_rejected():
    pair = design_eigen_anchored_pair(0.5)
    orth = type(pair)(0.0, np.array([1, 0], complex), np.array([0, 1], complex), pair.kind)
    with pytest.raises(ValueError):
        weak_value(orth, SIGMA_X)


@settings(max_examples=40, deadline=None)
@given(probs)
def test_cat_coefficients_closed_forms(p):
    cr = cat_coefficients(design_sigma_x_pair(p))
    s = math.sqrt(p)
    assert cr.c0 == pytest.approx((1 + s) / 2, abs=1e-12)
    assert cr.c1 == pytest.approx((s - 1) / 2, abs=1e-12)
    cr = cat_coefficients(design_eigen_anchored_pair(p))
    r = math.sqrt(1 - p)
    assert cr.c0 == pytest.approx((s + r) / 2, abs=1e-12)
    assert cr.c1 == pytest.approx((s - r) / 2, abs=1e-12)


def test_single_branch_at_p_one():
    assert abs(cat_coefficients(design_sigma_x_pair(1.0)).c1) < 1e-15


def test_expected_shift_examples():
    cr = cat_coefficients(design_sigma_x_pair(0.25))
    assert expected_shift(CatReadout(cr.c0, cr.c1, 0.0, 1.0)) == pytest.approx(2.0, abs=1e-12)
    assert expected_shift(CatReadout(cr.c0, cr.c1, 50.0, 1.0)) == pytest.approx(0.8, abs=1e-12)
    for gamma in (0.0, 0.3, 4.0):
        assert expected_shift(CatReadout(0.7, 0.0, gamma, 2.5)) == pytest.approx(2.5)


def test_cat_readout_validation():
    with pytest.raises(ValueError):
        CatReadout(0, 0)
    with pytest.raises(ValueError):
        CatReadout(1, 0, gamma=-1)


@settings(max_examples=40, deadline=None)
@given(probs, st.sampled_from([SelectionKind.SIGMA_X_OPTIMAL, SelectionKind.EIGEN_ANCHORED]))
def test_limits_of_shift(p, kind):
    pair = DESIGNS[kind](p)
    cr = cat_coefficients(pair)
    weak = expected_shift(CatReadout(cr.c0, cr.c1, 0.0, 1.0))
    strong = expected_shift(CatReadout(cr.c0, cr.c1, 30.0, 1.0))
    assert weak == pytest.approx(weak_limit(pair), rel=1e-9, abs=1e-9)
    assert strong == pytest.approx(strong_limit(pair), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(probs, st.floats(0, 5), st.floats(0, 5))
def test_shift_monotone_in_gamma(p, g1, g2):
    cr = cat_coefficients(design_sigma_x_pair(p))
    lo, hi = sorted((g1, g2))
    s_lo = expected_shift(CatReadout(cr.c0, cr.c1, lo, 1.0))
    s_hi = expected_shift(CatReadout(cr.c0, cr.c1, hi, 1.0))
    # c0* c1 (|c0|^2 - |c1|^2) <= 0 here, so the shift decreases with Gamma
    assert s_hi <= s_lo + 1e-12


def test_readout_curve_examples():
    rows = readout_curve(SelectionKind.SIGMA_X_OPTIMAL, [0.0, 0.7, 3.0], [1.0])
    assert all(r["shift_over_gT"] == pytest.approx(1, abs=1e-12) for r in rows)
    rows = readout_curve("eigen_anchored", [0.0, 0.7, 3.0], [0.5])
    assert all(r["shift_over_gT"] == pytest.approx(1, abs=1e-12) for r in rows)
    (row,) = readout_curve(SelectionKind.SIGMA_X_OPTIMAL, [0.01], [0.49])
    assert row["shift_over_gT"] == pytest.approx(1 / 0.7, abs=1e-3)


@pytest.mark.parametrize("kind", [SelectionKind.SIGMA_X_OPTIMAL, SelectionKind.EIGEN_ANCHORED])
def test_readout_rows_bracketed(kind):
    p_grid = np.linspace(0.02, 1, 25)
    rows = readout_curve(kind, [0.01, 0.3, 1.0, 2.0, 10.0], p_grid)
    for r in rows:
        lo, hi = sorted((r["weak_limit"], r["strong_limit"]))
        assert lo - 1e-12 <= r["shift_over_gT"] <= hi + 1e-12


@pytest.mark.parametrize("gT", [0.2, 1.0, 3.0])
def test_shift_matches_grid(gT):
    trap = TrapSpec()
    grid = GridSpec(-14.0, 14.0, 4096)
    psi = gaussian_ground_state(grid, trap, 0.0)
    pair = design_sigma_x_pair(0.3)
    out = conditional_translate(SpinGridWavePacket.product(pair.i_state, psi), 1.0, gT).project(pair.f_state)
    predicted = expected_shift(cat_coefficients(pair, gT, trap))
    assert out.mean_x() == pytest.approx(predicted, abs=1e-4 * gT)


def test_interference_factor():
    assert interference_factor(1.0) == pytest.approx(1.0)
    assert interference_factor(2.0, TrapSpec(mass=0.5)) == pytest.approx(2.0 / math.sqrt(2))
