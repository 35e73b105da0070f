import math

import numpy as np
import pytest

from thermocount.convex import PressureSurface
from thermocount.errors import SlopeOutOfRange
from thermocount.manhattan import (
    bishop_steger,
    bs_inequality_scan,
    correlation_number,
    curve_point,
    point_at_slope,
    rigidity_gap,
    solve_q,
    swap_check,
    trace_curve,
)

from conftest import A_STAR, B_STAR, DELTA_F, DELTA_G, H_BS, H_STAR, M_STAR, SLOPE_RANGE, T_STAR


def test_bowen_roots_and_endpoints(standard_curve):
    assert standard_curve.delta_f == pytest.approx(DELTA_F, abs=1e-12)
    assert standard_curve.delta_g == pytest.approx(DELTA_G, abs=1e-12)
    first, last = standard_curve.samples[0], standard_curve.samples[-1]
    assert (first.s, first.q) == (0.0, pytest.approx(DELTA_G, abs=1e-10))
    assert last.s == pytest.approx(DELTA_F) and abs(last.q) < 1e-10


def test_curve_equation_against_closed_form(standard_curve):
    f, g = np.array([1.0, math.sqrt(2)]), np.array([math.sqrt(3), 1.0])
    for p in standard_curve.samples[::20]:
        assert abs(np.exp(-p.s * f - p.q * g).sum() - 1) < 1e-12
        assert p.residual < 1e-12


def test_convex_decreasing_and_below_secant(standard_curve):
    c = standard_curve
    assert np.all(np.diff(c.q) < 0)
    assert c.second_differences().min() > 0
    assert np.max(c.s / c.delta_f + c.q / c.delta_g - 1) <= 1e-12
    assert c.slope_consistency() < 1e-4


def test_slope_range_and_orientation(standard_curve):
    lo, hi = standard_curve.slope_range
    assert lo == pytest.approx(SLOPE_RANGE[0], abs=1e-9)
    assert hi == pytest.approx(SLOPE_RANGE[1], abs=1e-9)
    # slopes increase from (0, delta_g) towards (delta_f, 0)
    assert np.all(np.diff(standard_curve.m) > 0)


def test_correlation_number_at_secant_slope(standard_curve):
    H, a, b = correlation_number(standard_curve, M_STAR)
    assert H == pytest.approx(H_STAR, abs=1e-10)
    assert a == pytest.approx(A_STAR, abs=1e-9)
    assert b == pytest.approx(B_STAR, abs=1e-9)
    assert point_at_slope(standard_curve, M_STAR).t_m == pytest.approx(T_STAR, abs=1e-9)


def test_point_at_slope_matches_slope(standard_curve):
    lo, hi = standard_curve.slope_range
    for m in np.linspace(lo, hi, 9):
        assert abs(point_at_slope(standard_curve, m).m - m) < 1e-8
    with pytest.raises(SlopeOutOfRange):
        point_at_slope(standard_curve, hi + 0.1)


def test_rigidity_gap(standard_curve, rigid_curve):
    m_star, gap = rigidity_gap(standard_curve)
    assert m_star == pytest.approx(M_STAR, abs=1e-12)
    assert gap == pytest.approx(DELTA_F - H_STAR, abs=1e-10)
    assert gap > 1e-4
    assert rigid_curve.rigid
    assert abs(rigidity_gap(rigid_curve)[1]) < 1e-8
    assert rigid_curve.secant_deviation() < 1e-9
    assert rigid_curve.delta_g == pytest.approx(rigid_curve.delta_f / 1.7, abs=1e-12)


def test_rigid_curve_rejects_other_slopes(rigid_curve):
    with pytest.raises(SlopeOutOfRange):
        point_at_slope(rigid_curve, 1.5)


def test_swap_identity(standard_pair, standard_curve):
    gf = trace_curve(PressureSurface(standard_pair.swapped()), 201)
    lo, hi = standard_curve.slope_range
    for m in np.linspace(lo, hi, 7)[1:-1]:
        assert swap_check(standard_curve, gf, m) < 1e-7


def test_swap_identity_for_equal_potentials(full2):
    from conftest import make_pair

    pair = make_pair(full2, 1, [1.0, math.sqrt(2)], [1.0, math.sqrt(2)])
    c = trace_curve(PressureSurface(pair), 21)
    assert swap_check(c, c, 1.0) < 1e-12


@pytest.mark.parametrize("ab", [(1.0, 1.0), (2.0, 1.0)])
def test_bishop_steger(standard_surface, ab):
    alpha, beta = ab
    assert bishop_steger(standard_surface, alpha, beta) == pytest.approx(H_BS[ab], abs=1e-12)
    curve = trace_curve(standard_surface, 2001)
    rep = bs_inequality_scan(curve, alpha, beta)
    assert abs(rep.refined_max - rep.h_bs) < 1e-9
    assert rep.max_error < 1e-6
    assert rep.ratio_error < 1e-3
    assert rep.max_ratio <= rep.h_bs + 1e-12


def test_solve_q_and_curve_point(standard_surface):
    q = solve_q(standard_surface, 0.3)
    assert abs(standard_surface.value((-0.3, -q))) < 1e-12
    p = curve_point(standard_surface, 0.3)
    assert p.H == pytest.approx(p.s + p.m * p.q)
    assert p.t_m == pytest.approx(1 / p.x_m[0])


def test_extension_flags_samples(standard_surface):
    c = trace_curve(standard_surface, 11, extend=0.1)
    assert c.samples[0].extended and c.samples[-1].extended
    assert not any(p.extended for p in c.samples[1:-1])
