import math

import numpy as np
import pytest

from thermocount.errors import Inconclusive
from thermocount.potential import (
    Independence,
    Potential,
    PotentialPair,
    TruncationFamily,
    arithmetic_witness,
    entropy_gap_series,
    ergodic_sum,
    ergodic_sum_along,
    ergodic_sums,
    estimate_critical_exponent,
    linear_combination,
    refine_depth,
    sup_difference,
)
from thermocount.shift_core import enumerate_fix, golden_mean_shift

from conftest import make_pair


def test_from_values_mapping_and_sequence_agree(full2):
    a = Potential.from_values(full2, 2, {"00": 1, "01": 2, "10": 3, "11": 4})
    b = Potential.from_values(full2, 2, [1, 2, 3, 4])
    assert np.array_equal(a.values, b.values)
    assert a((1, 0)) == 3.0


def test_from_values_rejects_incomplete_tables():
    gm = golden_mean_shift()
    with pytest.raises(ValueError):
        Potential.from_values(gm, 2, {"00": 1, "01": 2})
    with pytest.raises(ValueError):
        Potential.from_values(gm, 2, [1, 2, 3, 4])  # "11" is not admissible


def test_ergodic_sum_by_hand(full2):
    f = Potential.from_values(full2, 2, {"00": 1, "01": 2, "10": 3, "11": 4})
    # periodic point (011)^inf: windows 01, 11, 10
    assert ergodic_sum(f, (0, 1, 1)) == 2 + 4 + 3
    # along 011 then z = 0...: windows 01, 11, 10
    assert ergodic_sum_along(f, (0, 1, 1), (0,)) == 9
    assert ergodic_sum_along(f, (0, 1, 1), (1,)) == 2 + 4 + 4
    words = np.array([w.letters for w in enumerate_fix(full2, 5)])
    vec = ergodic_sums(f, words)
    assert np.allclose(vec, [ergodic_sum(f, w) for w in words], rtol=0, atol=1e-12)


def test_period_one_with_deep_potential(full2):
    f = Potential.from_values(full2, 3, np.arange(1.0, 9.0))
    assert ergodic_sum(f, (1,)) == f((1, 1, 1))


def test_refine_and_combine(full2):
    f = Potential.from_values(full2, 1, [1.0, 2.0])
    g = Potential.from_values(full2, 2, [1.0, 2.0, 3.0, 4.0])
    fr = refine_depth(f, 3)
    assert fr.depth == 3 and list(fr.values) == [1, 1, 1, 1, 2, 2, 2, 2]
    h = linear_combination((2.0, -1.0), (f, g))
    assert list(h.values) == [1.0, 0.0, 1.0, 0.0]
    assert sup_difference(f, g) == 2.0
    assert list((f + f).values) == [2.0, 4.0]
    assert list((3 * f).shifted(1).values) == [4.0, 7.0]


def test_pair_requires_positive(full2):
    f = Potential.from_values(full2, 1, [1.0, -1.0])
    with pytest.raises(ValueError):
        PotentialPair(f, f)


def test_pair_common_depth(full2):
    pair = make_pair(full2, 1, [1, 2], [1, 1])
    g2 = Potential.from_values(full2, 2, [1, 2, 3, 4])
    pair2 = PotentialPair(pair.f, g2)
    assert pair2.depth == 2 and pair2.f.depth == 2


def test_proportional_detection(standard_pair, rigid_pair):
    assert rigid_pair.is_proportional()
    assert not standard_pair.is_proportional()


def test_witness_flags(standard_pair, rigid_pair, depth2_pair, full2):
    assert arithmetic_witness(rigid_pair, 6) == Independence.VIOLATED
    # depth-1 on the full 2-shift: orbit sums form the lattice spanned by two vectors
    assert arithmetic_witness(standard_pair, 6) == Independence.VIOLATED
    assert arithmetic_witness(depth2_pair, 6) == Independence.VERIFIED
    integer = make_pair(full2, 2, [1, 2, 3, 5], [2, 1, 1, 3])
    assert arithmetic_witness(integer, 6) == Independence.VIOLATED


def test_truncation_family_values():
    fam = TruncationFamily("log", {"scale": 2.0})
    assert np.allclose(fam.values(3), 2 * np.log([2.0, 3.0, 4.0]))
    with pytest.raises(ValueError):
        TruncationFamily("log", {}, N_max=8).values(9)
    pot = fam.potential(5)
    assert pot.shift.alphabet_size == 5


def test_entropy_gap_series_tends_to_zeta():
    fam = TruncationFamily("log", {"scale": 2.0})
    N = 16384
    # sum_{a>=1} (a+1)^-2 = zeta(2) - 1; the tail beyond N is about 1/(N+1.5)
    partial = entropy_gap_series(fam, 1.0, N)
    assert abs(partial + 1.0 / (N + 1.5) - (math.pi**2 / 6 - 1)) < 1e-9


@pytest.mark.parametrize("scale,expected", [(2.0, 0.5), (1.0, 1.0), (4.0, 0.25)])
def test_critical_exponent_of_log_family(scale, expected):
    fam = TruncationFamily("log", {"scale": scale})
    est = estimate_critical_exponent(fam, [16, 64, 256, 1024, 4096, 16384])
    assert not est.converges_for_all
    assert est.d_hat == pytest.approx(expected, abs=0.05)


@pytest.mark.parametrize("fam", [TruncationFamily("linear"), TruncationFamily("power", {"exponent": 0.5})])
def test_critical_exponent_fast_growth_converges_everywhere(fam):
    est = estimate_critical_exponent(fam, [16, 64, 256, 1024, 4096])
    assert est.converges_for_all and est.d_hat == 0.0


def test_critical_exponent_inconclusive():
    fam = TruncationFamily("log", {"scale": 1e-3})
    with pytest.raises(Inconclusive):
        estimate_critical_exponent(fam, [16, 64, 256, 1024], s_max=5.0)
