import itertools

import numpy as np
import pytest

from thermocount.errors import DepthTooShallow, EmptyRowOrColumn, NotMixing
from thermocount.shift_core import (
    Cylinder,
    PeriodicWord,
    admissible_words,
    build_shift,
    count_admissible,
    cylinders,
    enumerate_fix,
    enumerate_preimages,
    full_shift,
    golden_mean_shift,
    pick_sample_word,
    prefix_partitions,
    primitivity_index,
    str_to_word,
    trace_power,
    word_to_str,
)

LUCAS = [None, 1, 3, 4, 7, 11, 18, 29, 47, 76, 123]


def test_primitivity_index():
    assert primitivity_index(np.ones((3, 3), bool)) == 1
    assert primitivity_index(np.array([[1, 1], [1, 0]], bool)) == 2
    # 3-cycle plus one loop: needs several steps to fill in
    T = np.array([[1, 1, 0], [0, 0, 1], [1, 0, 0]], bool)
    k = primitivity_index(T)
    assert np.all(np.linalg.matrix_power(T.astype(int), k) > 0)
    assert not np.all(np.linalg.matrix_power(T.astype(int), k - 1) > 0)


def test_build_shift_rejects_bad_matrices():
    with pytest.raises(EmptyRowOrColumn):
        build_shift(2, [[1, 1], [0, 0]])
    with pytest.raises(NotMixing):
        build_shift(2, [[0, 1], [1, 0]])


def test_golden_mean_cylinders():
    gm = golden_mean_shift()
    words = {word_to_str(w) for w in admissible_words(gm, 3)}
    assert words == {"000", "001", "010", "100", "101"}
    assert len(cylinders(gm, 3)) == 5


def test_fix_counts_are_lucas_numbers():
    gm = golden_mean_shift()
    for n in range(1, 11):
        assert sum(1 for _ in enumerate_fix(gm, n)) == LUCAS[n] == trace_power(gm, n)


def test_full_shift_fix_enumeration_is_lexicographic_and_complete():
    sh = full_shift(3)
    got = [w.letters for w in enumerate_fix(sh, 4)]
    assert got == list(itertools.product(range(3), repeat=4))


class _Recorder:
    def __init__(self):
        self.stack, self.leaves = [], []

    def push(self, a):
        self.stack.append(a)

    def pop(self):
        self.stack.pop()

    def leaf(self, word):
        assert tuple(self.stack) == word.letters
        self.leaves.append(word.letters)


def test_visitor_tracks_the_walk():
    rec = _Recorder()
    out = list(enumerate_fix(golden_mean_shift(), 6, rec))
    assert len(rec.leaves) == len(out) == 18
    assert rec.stack == []


def test_word_string_round_trip():
    assert str_to_word(word_to_str((0, 1, 1, 0))) == (0, 1, 1, 0)
    assert PeriodicWord((0, 1, 0)).period == 3
    assert Cylinder((1, 0)).depth == 2


@pytest.mark.parametrize("shift", [full_shift(2), full_shift(3), golden_mean_shift()])
def test_preimages_biject_with_periodic_words(shift):
    for p in cylinders(shift, 1) + cylinders(shift, 2):
        z = pick_sample_word(shift, p)
        assert shift.is_admissible(z.head(64))
        for n in range(p.depth, 8):
            pre = list(enumerate_preimages(shift, z, n, p))
            assert len(set(pre)) == len(pre)
            fix = [w for w in enumerate_fix(shift, n) if w.letters[: p.depth] == p.prefix]
            assert len(pre) == len(fix)
            for y in pre:
                assert tuple(y[: p.depth]) == p.prefix
                assert shift.is_admissible(tuple(y) + z.head(3))


def test_preimage_argument_checks():
    from thermocount.potential import Potential

    sh = full_shift(2)
    p = Cylinder((0, 1))
    with pytest.raises(ValueError):
        list(enumerate_preimages(sh, pick_sample_word(sh, p), 1, p))
    deep = Potential.from_values(sh, 3, np.arange(8.0) + 1)
    with pytest.raises(DepthTooShallow):
        list(enumerate_preimages(sh, (0,), 4, p, (deep,)))


def test_count_admissible_matches_enumeration():
    gm = golden_mean_shift()
    for k in range(1, 9):
        assert count_admissible(gm, k) == len(admissible_words(gm, k))


def test_prefix_partitions_cover_all_words():
    gm = golden_mean_shift()
    parts = prefix_partitions(gm, 10, target=16)
    assert len({tuple(r) for r in parts}) == len(parts)
    total = sum(
        sum(1 for w in enumerate_fix(gm, 10) if w.letters[: len(r)] == tuple(r)) for r in parts
    )
    assert total == trace_power(gm, 10)
