import math

import numpy as np
import pytest

from thermocount.convex import PressureSurface
from thermocount.errors import GridTooCoarse, NotPositiveDefinite
from thermocount.saddle import (
    gaussian_problem,
    lipschitz_problem,
    odd_problem,
    pressure_problem,
    quadrature_oracle,
    quartic_problem,
    relative_error,
    saddle_leading_term,
)


@pytest.mark.parametrize("n", [16.0, 64.0, 256.0])
def test_gaussian_disc_integral_closed_form(n):
    prob = gaussian_problem(n, epsilon=0.5)
    exact = 2 * math.pi / n * (1 - math.exp(-n * 0.25 / 2))
    # the staircase boundary of the grid dominates the error when the
    # integrand is not yet small at the rim
    q = quadrature_oracle(prob, 0.5 / (64 * math.sqrt(n)))
    assert abs(q - exact) / exact < 2e-4
    assert abs(saddle_leading_term(prob) - 2 * math.pi / n) < 1e-15


def test_gaussian_anisotropic_leading_term():
    A = np.array([[2.0, 0.3], [0.3, 0.5]])
    prob = gaussian_problem(200.0, hess=A)
    lead = saddle_leading_term(prob)
    assert lead == pytest.approx(2 * math.pi / (200 * math.sqrt(np.linalg.det(A))))
    assert abs(quadrature_oracle(prob, 1.0 / 400) - lead) / abs(lead) < 1e-6


def test_odd_amplitude_cancels():
    prob = odd_problem(100.0)
    q = quadrature_oracle(prob, 1.0 / 200)
    assert abs(q.imag) < 1e-15
    assert abs(q - saddle_leading_term(prob)) < 1e-6


def test_lipschitz_amplitude_error_halves():
    errs = [relative_error(lipschitz_problem(n)) for n in (64.0, 256.0, 1024.0)]
    # G(i theta) - G(0) = |theta| contributes sqrt(pi/(2n)) relative
    for n, e in zip((64.0, 256.0, 1024.0), errs):
        assert e == pytest.approx(math.sqrt(math.pi / (2 * n)), rel=1e-3)
    assert errs[1] / errs[0] == pytest.approx(0.5, abs=1e-3)


def test_quartic_error_is_order_one_over_n():
    # F(i theta) = -|theta|^2/2 + c|theta|^4: first correction 8c/n relative
    errs = [relative_error(quartic_problem(n)) for n in (64.0, 256.0, 1024.0)]
    for n, e in zip((64.0, 256.0, 1024.0), errs):
        assert e == pytest.approx(0.8 / n, rel=0.2)
    assert errs[1] / errs[0] == pytest.approx(0.25, abs=0.01)


def test_grid_guard():
    prob = gaussian_problem(100.0)
    with pytest.raises(GridTooCoarse):
        quadrature_oracle(prob, 0.1)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        saddle_leading_term(gaussian_problem(10.0, hess=[[1.0, 0.0], [0.0, -1.0]]))


def test_pressure_problem_leading_term(depth2_pair):
    S = PressureSurface(depth2_pair)
    x = S.grad((-0.5, -0.4))
    prob = pressure_problem(S, x, 50.0)
    assert math.isfinite(prob.F0)
    lead = saddle_leading_term(prob)
    det = np.linalg.det(S.hess((-0.5, -0.4)))
    assert lead == pytest.approx(math.exp(50 * prob.F0) * 2 * math.pi / (50 * math.sqrt(det)), rel=1e-6)
