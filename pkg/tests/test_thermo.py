import math

import numpy as np
import pytest
from scipy.optimize import brentq

from thermocount.errors import BracketFail
from thermocount.potential import Potential, refine_depth
from thermocount.shift_core import admissible_words, full_shift, golden_mean_shift
from thermocount.thermo import (
    bowen_root,
    bracketed_newton,
    gibbs_constant,
    pressure,
    rpf_data,
    transfer_matrix,
)

PHI = (1 + math.sqrt(5)) / 2


def test_closed_form_pressure_grid(full2):
    for a in np.linspace(-3, 3, 21):
        for b in (-2.0, 0.0, 1.5):
            u = Potential.from_values(full2, 1, [a, b])
            assert pressure(full2, u) == pytest.approx(np.logaddexp(a, b), abs=1e-10)


def test_golden_mean_entropy():
    gm = golden_mean_shift()
    assert pressure(gm, Potential.constant(gm, 0.0)) == pytest.approx(math.log(PHI), abs=1e-12)


def test_parry_measure():
    gm = golden_mean_shift()
    r = rpf_data(gm, Potential.constant(gm, 0.0))
    assert r.cylinder_measure((1,)) == pytest.approx(1 / (1 + PHI**2), abs=1e-12)
    assert r.entropy() == pytest.approx(math.log(PHI), abs=1e-12)


def test_depth_two_pressure_against_two_by_two_matrix(full2):
    # Sum over Fix^n of exp(S_n u) is the trace of M^n with M[a, b] = exp(u(ab)).
    vals = np.array([0.3, -1.1, 0.7, 0.2])
    u = Potential.from_values(full2, 2, vals)
    M = np.exp(vals).reshape(2, 2)
    assert pressure(full2, u) == pytest.approx(math.log(max(abs(np.linalg.eigvals(M)))), abs=1e-12)


def test_bernoulli_equilibrium_state(full2):
    u = Potential.from_values(full2, 1, [0.4, -0.9])
    r = rpf_data(full2, u)
    p = np.exp([0.4, -0.9]) / np.exp([0.4, -0.9]).sum()
    assert np.allclose(r.mu, p, atol=1e-13)
    assert r.entropy() == pytest.approx(-(p * np.log(p)).sum(), abs=1e-12)
    assert r.cylinder_measure((0, 1, 1)) == pytest.approx(p[0] * p[1] ** 2, abs=1e-13)
    f = Potential.from_values(full2, 1, [2.0, 5.0])
    assert r.integral(f) == pytest.approx(2 * p[0] + 5 * p[1], abs=1e-13)


def test_rpf_normalisation_and_residuals():
    sh = full_shift(3)
    rng = np.random.default_rng(1)
    u = Potential.from_values(sh, 2, rng.normal(size=9))
    r = rpf_data(sh, u)
    assert r.nu.sum() == pytest.approx(1.0)
    assert r.h @ r.nu == pytest.approx(1.0)
    assert max(r.residuals()) < 1e-10
    assert r.invariance_residual() < 1e-10
    assert 0 <= r.gap < 1
    chain = r.forward_chain()
    assert np.allclose(chain.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(r.mu @ chain, r.mu, atol=1e-12)
    # entropy from the chain agrees with P - int u
    logs = np.where(chain > 0, np.log(np.where(chain > 0, chain, 1)), 0)
    assert -(r.mu[:, None] * chain * logs).sum() == pytest.approx(r.entropy(), abs=1e-10)


def test_cylinder_measures_add_up():
    gm = golden_mean_shift()
    u = Potential.from_values(gm, 2, [0.1, 0.5, -0.3])
    r = rpf_data(gm, u)
    for n in (1, 2, 3, 5):
        total = sum(r.cylinder_measure(tuple(w)) for w in admissible_words(gm, n))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_transfer_matrix_applies_like_dense(full2):
    u = Potential.from_values(full2, 2, [0.1, 0.2, 0.3, 0.4])
    T = transfer_matrix(full2, u)
    phi = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(T.apply(phi), T.entries @ phi)
    # (L phi)(ab) = sum_c exp(u(c a)) phi(c a)
    assert T.apply(phi)[1] == pytest.approx(math.exp(0.1) * 1 + math.exp(0.3) * 3)


def test_pressure_refinement_invariant(full2):
    u = Potential.from_values(full2, 1, [0.3, -0.2])
    assert pressure(full2, refine_depth(u, 3)) == pytest.approx(pressure(full2, u), abs=1e-12)


def test_bowen_root_golden_ratio(full2):
    f = Potential.from_values(full2, 1, [math.log(2), math.log(4)])
    oracle = brentq(lambda s: 2.0**-s + 4.0**-s - 1, 0.1, 2, xtol=1e-15)
    assert bowen_root(full2, f) == pytest.approx(math.log2(PHI), abs=1e-12)
    assert oracle == pytest.approx(math.log2(PHI), abs=1e-12)


def test_bowen_root_of_constant_is_entropy_ratio():
    gm = golden_mean_shift()
    assert bowen_root(gm, Potential.constant(gm, 2.0)) == pytest.approx(math.log(PHI) / 2, abs=1e-12)


def test_gibbs_constant_bernoulli_is_one(full2):
    u = Potential.from_values(full2, 1, [0.4, -0.9])
    assert gibbs_constant(full2, u, rpf_data(full2, u), 6) == pytest.approx(1.0, abs=1e-12)


def test_gibbs_constant_markov_bounded():
    gm = golden_mean_shift()
    u = Potential.from_values(gm, 2, [0.1, 0.5, -0.3])
    r = rpf_data(gm, u)
    Qs = [gibbs_constant(gm, u, r, n) for n in (4, 8, 12)]
    assert Qs[0] <= Qs[1] <= Qs[2] < 10
    assert Qs[2] == pytest.approx(Qs[1], rel=1e-9)


def test_bracketed_newton():
    root = bracketed_newton(lambda x: (x**3 - 2, 3 * x**2), 0.0, 3.0)
    assert root == pytest.approx(2 ** (1 / 3), abs=1e-12)
    with pytest.raises(BracketFail):
        bracketed_newton(lambda x: (x**2 + 1, 2 * x), -1.0, 1.0)
