"""Property-based checks of structural invariants."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from thermocount.convex import PressureSurface, legendre
from thermocount.counting import (
    WindowSpec,
    count_fix_window,
    exhaustive_count,
    laplace_fourier_check,
)
from thermocount.potential import Potential, PotentialPair, ergodic_sum, refine_depth
from thermocount.shift_core import (
    count_admissible,
    cylinders,
    enumerate_fix,
    enumerate_preimages,
    full_shift,
    golden_mean_shift,
    pick_sample_word,
    trace_power,
)
from thermocount.thermo import pressure

SHIFTS = [full_shift(2), full_shift(3), golden_mean_shift()]
FAST = settings(max_examples=40, deadline=None)

shift_st = st.sampled_from(SHIFTS)
real = st.floats(-3, 3, allow_nan=False)
positive = st.floats(0.2, 3, allow_nan=False)


@st.composite
def potentials(draw, shift_strategy=shift_st, values=real, depth=st.integers(1, 2)):
    shift = draw(shift_strategy)
    k = draw(depth)
    n = count_admissible(shift, k)
    vals = draw(st.lists(values, min_size=n, max_size=n))
    return Potential.from_values(shift, k, vals)


@st.composite
def pairs(draw):
    shift = draw(shift_st)
    f = draw(potentials(st.just(shift), positive))
    g = draw(potentials(st.just(shift), positive))
    return PotentialPair(f, g)


@FAST
@given(potentials(), st.floats(-5, 5))
def test_pressure_shift_equivariance(u, c):
    assert abs(pressure(u.shift, u.shifted(c)) - pressure(u.shift, u) - c) < 1e-11


@FAST
@given(potentials())
def test_pressure_between_extremes_plus_entropy(u):
    h = pressure(u.shift, Potential.constant(u.shift, 0.0))
    P = pressure(u.shift, u)
    assert h + u.min - 1e-12 <= P <= h + u.max + 1e-12


@FAST
@given(potentials(), st.integers(1, 2))
def test_pressure_refinement(u, extra):
    assert abs(pressure(u.shift, refine_depth(u, u.depth + extra)) - pressure(u.shift, u)) < 1e-11


@FAST
@given(pairs(), st.floats(-2, 1), st.floats(-2, 1), st.floats(-2, 1), st.floats(-2, 1))
def test_pressure_midpoint_convex(pair, a1, a2, b1, b2):
    S = PressureSurface(pair)
    mid = S.value(((a1 + b1) / 2, (a2 + b2) / 2))
    assert mid <= 0.5 * (S.value((a1, a2)) + S.value((b1, b2))) + 1e-12


@FAST
@given(potentials(), st.integers(1, 7), st.data())
def test_ergodic_sum_rotation_invariant(u, n, data):
    words = [w.letters for w in enumerate_fix(u.shift, n)]
    w = data.draw(st.sampled_from(words))
    r = data.draw(st.integers(0, n - 1))
    assert abs(ergodic_sum(u, w) - ergodic_sum(u, w[r:] + w[:r])) < 1e-12


@settings(max_examples=20, deadline=None)
@given(shift_st, st.integers(1, 9))
def test_fix_count_is_trace(shift, n):
    assert sum(1 for _ in enumerate_fix(shift, n)) == trace_power(shift, n)


@settings(max_examples=20, deadline=None)
@given(shift_st, st.integers(1, 8), st.data())
def test_preimage_count_matches_matrix_power(shift, n, data):
    p = data.draw(st.sampled_from(cylinders(shift, 1)))
    z = pick_sample_word(shift, p)
    count = sum(1 for _ in enumerate_preimages(shift, z, n, p))
    T = np.linalg.matrix_power(shift.transitions.astype(np.int64), n)
    assert count == T[p.prefix[0], z.first]


@settings(max_examples=60, deadline=None)
@given(pairs(), st.integers(1, 10), st.floats(0.5, 2.0), st.floats(0.1, 2.0), st.floats(0.3, 3.0))
def test_pruned_count_equals_exhaustive(pair, n, m, xi, tscale):
    spec = WindowSpec(m, xi, tscale * n)
    assert count_fix_window(pair.shift, pair, spec, n) == exhaustive_count(pair, spec, n)


@settings(max_examples=30, deadline=None)
@given(pairs(), st.integers(2, 9), st.floats(-1, 0.5), st.floats(-1, 0.5), st.data())
def test_laplace_fourier(pair, n, z1, z2, data):
    p = data.draw(st.sampled_from(cylinders(pair.shift, 2)))
    z_p = pick_sample_word(pair.shift, p)
    assert laplace_fourier_check(pair.shift, pair, p, z_p, n, (z1, z2)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(pairs(), st.floats(-1.2, 0.0), st.floats(-1.2, 0.0))
def test_young_equality_and_inequality(pair, z1, z2):
    S = PressureSurface(pair)
    x = S.grad((z1, z2))
    lp = legendre(S, x, z0=(z1, z2))
    assert lp.young_residual(S) < 1e-8
    for w in [(0.0, 0.0), (-1.0, -0.5), (z1 + 0.3, z2 - 0.2)]:
        assert lp.pstar >= float(x @ np.array(w)) - S.value(w) - 1e-10
