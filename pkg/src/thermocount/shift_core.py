"""Finite Markov shifts: cylinders, periodic words and sample-point preimages.

Letters are the integers ``0..A-1``.  Truncations of countable shifts carry
optional display labels (``1..N``) but are otherwise ordinary finite shifts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DepthTooShallow, EmptyRowOrColumn, NotMixing

SAMPLE_PREFIX_LENGTH = 64


@dataclass(frozen=True, eq=False)
class Shift:
    """One-sided Markov shift on ``alphabet_size`` letters.

    Instances hash by identity so they can key caches of derived
    structures (cylinder lists, transfer-matrix sparsity patterns).
    """

    alphabet_size: int
    transitions: np.ndarray
    primitivity_index: Optional[int] = None
    labels: Optional[tuple] = None

    @property
    def bip_witness(self) -> tuple:
        # big images and preimages is automatic for a finite alphabet
        return tuple(range(self.alphabet_size))

    def label(self, letter: int):
        return letter if self.labels is None else self.labels[letter]

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        T = self.transitions
        for a, b in zip(word[:-1], word[1:]):
            if not T[a, b]:
                return False
        if cyclic and len(word) > 0 and not T[word[-1], word[0]]:
            return False
        return True

    def to_dict(self) -> dict:
        out = {
            "alphabet_size": self.alphabet_size,
            "transitions": self.transitions.astype(int).tolist(),
        }
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out


def primitivity_index(transitions: np.ndarray) -> Optional[int]:
    """Smallest N <= A**2 with T**N entrywise positive, else None."""
    T = np.asarray(transitions, dtype=bool)
    A = T.shape[0]
    power = T.copy()
    Ti = T.astype(np.int64)
    for N in range(1, A * A + 1):
        if power.all():
            return N
        power = (power.astype(np.int64) @ Ti) > 0
    return None


def build_shift(alphabet_size: int, transitions, labels=None) -> Shift:
    """Validate a 0/1 transition matrix and certify topological mixing.

    Raises
    ------
    EmptyRowOrColumn
        if some letter has no successor or no predecessor.
    NotMixing
        if no power ``T**N`` with ``N <= A**2`` is entrywise positive.
    """
    T = np.asarray(transitions)
    if T.ndim != 2 or T.shape != (alphabet_size, alphabet_size):
        raise ValueError(f"transitions must be {alphabet_size}x{alphabet_size}")
    if not np.isin(T, (0, 1)).all():
        raise ValueError("transitions must be a 0/1 matrix")
    T = T.astype(bool)
    dead_rows = np.flatnonzero(~T.any(axis=1))
    dead_cols = np.flatnonzero(~T.any(axis=0))
    if dead_rows.size or dead_cols.size:
        raise EmptyRowOrColumn(
            f"letters without successor {dead_rows.tolist()}, "
            f"without predecessor {dead_cols.tolist()}"
        )
    N = primitivity_index(T)
    if N is None:
        raise NotMixing("no power of the transition matrix is positive")
    T.setflags(write=False)
    if labels is not None:
        labels = tuple(labels)
        if len(labels) != alphabet_size:
            raise ValueError("labels must match the alphabet size")
    return Shift(alphabet_size, T, N, labels)


def full_shift(A: int, labels=None) -> Shift:
    return build_shift(A, np.ones((A, A), dtype=int), labels)


def golden_mean_shift() -> Shift:
    return build_shift(2, [[1, 1], [1, 0]])


def truncated_full_shift(N: int) -> Shift:
    """Full shift on the letters ``1..N`` (stored as ``0..N-1``)."""
    return full_shift(N, labels=range(1, N + 1))


@dataclass(frozen=True)
class Cylinder:
    prefix: tuple

    @property
    def depth(self) -> int:
        return len(self.prefix)

    def __str__(self) -> str:
        return word_to_str(self.prefix)


@dataclass(frozen=True)
class PeriodicWord:
    letters: tuple

    @property
    def period(self) -> int:
        return len(self.letters)


def word_to_str(word: Sequence[int]) -> str:
    if all(0 <= a < 10 for a in word):
        return "".join(str(a) for a in word)
    return ",".join(str(a) for a in word)


def str_to_word(text: str) -> tuple:
    text = text.strip()
    if "," in text:
        return tuple(int(a) for a in text.split(","))
    return tuple(int(a) for a in text)


def admissible_words(shift: Shift, k: int) -> np.ndarray:
    """All admissible length-k words as rows of an int array, lexicographic."""
    if k < 1:
        raise ValueError("k must be >= 1")
    T = shift.transitions
    words = np.arange(shift.alphabet_size, dtype=np.int64)[:, None]
    for _ in range(k - 1):
        last = words[:, -1]
        rows, nxt = np.nonzero(T[last])
        words = np.hstack([words[rows], nxt[:, None]])
    return words


def cylinders(shift: Shift, k: int) -> list:
    """Admissible k-cylinders in lexicographic order."""
    return [Cylinder(tuple(int(a) for a in w)) for w in admissible_words(shift, k)]


def enumerate_fix(shift: Shift, n: int, visitor=None) -> Iterator[PeriodicWord]:
    """Yield every word of ``Fix^n`` once, in lexicographic order.

    If ``visitor`` is given it receives ``push(letter)`` / ``pop()`` calls as
    the depth-first walk descends and backtracks, and ``leaf(word)`` for each
    periodic word, so running sums can be kept without storing the set.
    The generator still yields each word.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    T = shift.transitions
    A = shift.alphabet_size
    word = [0] * n
    nxt = [0] * (n + 1)
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        if depth == n:
            if T[word[n - 1], word[0]]:
                pw = PeriodicWord(tuple(word))
                if visitor is not None:
                    visitor.leaf(pw)
                yield pw
            depth -= 1
            if visitor is not None and depth >= 0:
                visitor.pop()
            continue
        a = nxt[depth]
        while a < A and depth > 0 and not T[word[depth - 1], a]:
            a += 1
        if a >= A:
            depth -= 1
            if visitor is not None and depth >= 0:
                visitor.pop()
            continue
        word[depth] = a
        nxt[depth] = a + 1
        if visitor is not None:
            visitor.push(a)
        depth += 1
        nxt[depth] = 0


@dataclass(frozen=True)
class SampleWord:
    """Eventually periodic infinite word: a stored prefix then a repeated tail."""

    prefix: tuple
    tail: tuple = field(default=())

    def head(self, L: int) -> tuple:
        if L <= len(self.prefix):
            return self.prefix[:L]
        if not self.tail:
            raise DepthTooShallow(
                f"need {L} letters but only {len(self.prefix)} are stored"
            )
        extra = L - len(self.prefix)
        reps = -(-extra // len(self.tail))
        return self.prefix + (self.tail * reps)[:extra]

    @property
    def first(self) -> int:
        return self.prefix[0]


def _as_sample(z) -> SampleWord:
    return z if isinstance(z, SampleWord) else SampleWord(tuple(int(a) for a in z))


def enumerate_preimages(
    shift: Shift, z, n: int, p: Cylinder, potentials: Sequence = ()
) -> Iterator:
    """Yield the words ``w`` of length n with ``w z`` admissible and ``w`` in p.

    With ``potentials`` given, yields ``(word, sums)`` where ``sums[j]`` is the
    exact n-th ergodic sum of ``potentials[j]`` at the point ``w z``.
    """
    if n < p.depth:
        raise ValueError("n must be at least the cylinder depth")
    z = _as_sample(z)
    k = max([pot.depth for pot in potentials], default=1)
    if len(z.prefix) < k - 1:
        raise DepthTooShallow(f"sample word stores fewer than {k - 1} letters")
    zhead = z.head(max(k - 1, 1))
    T = shift.transitions
    A = shift.alphabet_size
    word = list(p.prefix) + [0] * (n - p.depth)
    if not shift.is_admissible(p.prefix):
        return

    def emit():
        w = tuple(word)
        if not potentials:
            return w
        from .potential import ergodic_sum_along

        return w, tuple(ergodic_sum_along(pot, w, zhead) for pot in potentials)

    if p.depth == n:
        if T[word[-1], zhead[0]]:
            yield emit()
        return
    nxt = [0] * (n + 1)
    depth = p.depth
    while depth >= p.depth:
        if depth == n:
            if T[word[n - 1], zhead[0]]:
                yield emit()
            depth -= 1
            continue
        a = nxt[depth]
        while a < A and not T[word[depth - 1], a]:
            a += 1
        if a >= A:
            depth -= 1
            continue
        word[depth] = a
        nxt[depth] = a + 1
        depth += 1
        if depth < n:
            nxt[depth] = 0


def _aperiodic_pattern(length: int) -> list:
    """0/1 pattern b-blocks separated by growing runs of a: 0 1 0 0 1 0 0 0 1 ..."""
    out, run = [], 1
    while len(out) < length:
        out.extend([0] * run + [1])
        run += 1
    return out[:length]


def _shortest_path(T: np.ndarray, src: int, dst: int) -> list:
    """Letters strictly after ``src`` up to and including ``dst`` (BFS)."""
    prev = {src: None}
    frontier = [src]
    while frontier:
        nxt = []
        for a in frontier:
            for b in np.flatnonzero(T[a]):
                b = int(b)
                if b == dst:
                    path = [b]
                    c = a
                    while c != src:
                        path.append(c)
                        c = prev[c]
                    return path[::-1]
                if b not in prev:
                    prev[b] = a
                    nxt.append(b)
        frontier = nxt
    raise NotMixing("graph is not strongly connected")


def _blocks(shift: Shift):
    """Two letter blocks that concatenate admissibly in pattern order.

    Prefers single letters a, b with a->a, a->b, b->a, so the pattern is
    literally ``a b a a b ...``.  Otherwise returns two closed walks at a
    common letter that do not commute (so their concatenations never become
    periodic).
    """
    T = shift.transitions
    A = shift.alphabet_size
    for a in range(A):
        if not T[a, a]:
            continue
        for b in range(A):
            if b != a and T[a, b] and T[b, a]:
                return (a,), (b,)
    v = 0
    loops = []
    for L in range(1, A * A + 2):
        for w in admissible_words(shift, L):
            w = tuple(int(x) for x in w)
            if w[0] != v or not T[w[-1], v]:
                continue
            for u in loops:
                if u + w != w + u:
                    return u, w
            loops.append(w)
    raise NotMixing("could not find two non-commuting cycles")


def pick_sample_word(shift: Shift, p: Cylinder, length: int = SAMPLE_PREFIX_LENGTH) -> SampleWord:
    """Deterministic non-periodic point of the cylinder p.

    The word is ``prefix(p)``, a shortest connecting path, then the pattern
    ``a b a a b a a a b ...`` written with two admissible blocks, truncated to
    ``length`` letters and continued by repeating block ``a`` forever.
    """
    T = shift.transitions
    blk_a, blk_b = _blocks(shift)
    word = list(p.prefix)
    if not word or not shift.is_admissible(word):
        raise ValueError(f"cylinder {p} is not admissible")
    if not T[word[-1], blk_a[0]]:
        word += _shortest_path(T, word[-1], blk_a[0])[:-1]
    for bit in _aperiodic_pattern(length):
        word.extend(blk_a if bit == 0 else blk_b)
        if len(word) >= length:
            break
    word = word[: max(length, p.depth)]
    if not T[word[-1], blk_a[0]]:
        word += _shortest_path(T, word[-1], blk_a[0])[:-1]
    z = SampleWord(tuple(word), tuple(blk_a))
    assert shift.is_admissible(z.head(len(z.prefix) + 2 * len(blk_a))), "inadmissible sample word"
    assert not _has_small_period(z.prefix), "sample prefix is periodic"
    return z


def _has_small_period(word: Sequence[int]) -> bool:
    n = len(word)
    w = np.asarray(word)
    for q in range(1, n // 2 + 1):
        if np.array_equal(w[q:], w[:-q]):
            return True
    return False


def trace_power(shift: Shift, n: int) -> int:
    M = np.linalg.matrix_power(shift.transitions.astype(object), n)
    return int(np.trace(M))


def count_admissible(shift: Shift, k: int) -> int:
    M = np.linalg.matrix_power(shift.transitions.astype(object), k - 1)
    return int(np.sum(M))


def prefix_partitions(shift: Shift, n: int, target: int = 64, fixed: Sequence[int] = ()) -> np.ndarray:
    """Admissible prefixes splitting the length-n lexicographic tree.

    Prefixes extend ``fixed`` until at least ``target`` of them exist or the
    prefix length reaches ``n - 1``.
    """
    T = shift.transitions
    words = np.array([list(fixed)], dtype=np.int64) if fixed else np.arange(
        shift.alphabet_size, dtype=np.int64
    )[:, None]
    while words.shape[0] < target and words.shape[1] < max(n - 1, 1):
        rows, nxt = np.nonzero(T[words[:, -1]])
        words = np.hstack([words[rows], nxt[:, None]])
    return words
