"""Locally constant potentials, ergodic sums and the entropy-gap series."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import mpmath
import numpy as np

from .errors import Inconclusive, ShiftMismatch
from .shift_core import (
    Shift,
    admissible_words,
    enumerate_fix,
    str_to_word,
    truncated_full_shift,
    word_to_str,
)


def _codes(words: np.ndarray, A: int) -> np.ndarray:
    k = words.shape[1]
    weights = A ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return words @ weights


@dataclass(frozen=True, eq=False)
class Potential:
    """Depth-k locally constant real function on a shift.

    ``values[i]`` is the value on the i-th admissible k-cylinder in
    lexicographic order.  Values may be of either sign: linear combinations
    such as ``z1 f + z2 g`` are potentials too.  Positivity is enforced where
    the theory needs it (see :class:`PotentialPair`).
    """

    shift: Shift
    depth: int
    values: np.ndarray
    words: np.ndarray = field(repr=False)
    code_index: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, shift: Shift, depth: int, values) -> "Potential":
        """Build from a sequence in cylinder order or a mapping keyed by word."""
        words = admissible_words(shift, depth)
        A = shift.alphabet_size
        if isinstance(values, Mapping):
            table = {}
            for key, val in values.items():
                w = str_to_word(key) if isinstance(key, str) else tuple(key)
                table[tuple(w)] = float(val)
            missing = [word_to_str(w) for w in map(tuple, words.tolist()) if w not in table]
            if missing or len(table) != len(words):
                raise ValueError(
                    f"table must cover exactly the admissible {depth}-cylinders; missing {missing}"
                )
            arr = np.array([table[tuple(w)] for w in words.tolist()], dtype=float)
        else:
            arr = np.asarray(values, dtype=float).ravel()
            if arr.size != len(words):
                raise ValueError(f"expected {len(words)} values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("potential values must be finite")
        code_index = np.full(A**depth, -1, dtype=np.int64)
        code_index[_codes(words, A)] = np.arange(len(words))
        arr = arr.copy()
        arr.setflags(write=False)
        return cls(shift, depth, arr, words, code_index)

    @classmethod
    def constant(cls, shift: Shift, c: float, depth: int = 1) -> "Potential":
        n = len(admissible_words(shift, depth))
        return cls.from_values(shift, depth, np.full(n, float(c)))

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def is_positive(self) -> bool:
        return self.min > 0

    def index_of(self, word: Sequence[int]) -> int:
        code = 0
        for a in word[: self.depth]:
            code = code * self.shift.alphabet_size + int(a)
        idx = int(self.code_index[code])
        if idx < 0:
            raise ValueError(f"word {word_to_str(word)} is not admissible")
        return idx

    def __call__(self, word: Sequence[int]) -> float:
        """Value at any point whose first k letters are ``word[:k]``."""
        return float(self.values[self.index_of(word)])

    def code_table(self) -> np.ndarray:
        """Values indexed by base-A code of the k-word, NaN if inadmissible."""
        out = np.full(self.code_index.shape, np.nan)
        ok = self.code_index >= 0
        out[ok] = self.values[self.code_index[ok]]
        return out

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "values": {word_to_str(w): float(v) for w, v in zip(self.words.tolist(), self.values)},
        }

    def __add__(self, other: "Potential") -> "Potential":
        return linear_combination((1.0, 1.0), (self, other))

    def __mul__(self, c: float) -> "Potential":
        return Potential.from_values(self.shift, self.depth, c * self.values)

    __rmul__ = __mul__

    def shifted(self, c: float) -> "Potential":
        return Potential.from_values(self.shift, self.depth, self.values + c)


def _check_same_shift(*pots: Potential) -> None:
    shift = pots[0].shift
    for p in pots[1:]:
        if p.shift is not shift:
            raise ShiftMismatch("potentials live on different shifts")


def ergodic_sum(pot: Potential, word) -> float:
    """n-th ergodic sum at the periodic point obtained by repeating ``word``."""
    letters = tuple(getattr(word, "letters", word))
    n = len(letters)
    if n < 1:
        raise ValueError("word must be non-empty")
    k = pot.depth
    ext = letters * (1 + -(-(k - 1) // n)) if k > 1 else letters
    return math.fsum(pot(ext[i : i + k]) for i in range(n))


def ergodic_sum_along(pot: Potential, word: Sequence[int], zhead: Sequence[int]) -> float:
    """S_n of ``pot`` at the point ``word`` followed by the infinite word z.

    Only the first ``depth - 1`` letters of z enter the sum.
    """
    k = pot.depth
    ext = tuple(word) + tuple(zhead[: k - 1])
    if len(ext) < len(word) + k - 1:
        from .errors import DepthTooShallow

        raise DepthTooShallow("sample word is shorter than depth - 1")
    return math.fsum(pot(ext[i : i + k]) for i in range(len(word)))


def ergodic_sums(pot: Potential, words: np.ndarray, cyclic: bool = True, zhead=()) -> np.ndarray:
    """Vectorised ergodic sums for a batch of equal-length words (rows)."""
    words = np.asarray(words, dtype=np.int64)
    n = words.shape[1]
    k = pot.depth
    if cyclic:
        ext = np.concatenate([words] * (1 + -(-(k - 1) // n)), axis=1) if k > 1 else words
    else:
        tail = np.broadcast_to(np.asarray(zhead[: k - 1], dtype=np.int64), (words.shape[0], k - 1))
        ext = np.concatenate([words, tail], axis=1)
    A = pot.shift.alphabet_size
    table = pot.code_table()
    codes = np.zeros((words.shape[0], n), dtype=np.int64)
    for j in range(k):
        codes = codes * A + ext[:, j : j + n]
    # numpy's pairwise summation along rows; ample for n up to a few hundred
    return table[codes].sum(axis=1)


def refine_depth(pot: Potential, k: int) -> Potential:
    """Same function written as a table on admissible k-cylinders."""
    if k < pot.depth:
        raise ValueError(f"cannot refine depth {pot.depth} down to {k}")
    if k == pot.depth:
        return pot
    words = admissible_words(pot.shift, k)
    head = _codes(words[:, : pot.depth], pot.shift.alphabet_size)
    return Potential.from_values(pot.shift, k, pot.values[pot.code_index[head]])


def common_depth(*pots: Potential) -> list:
    k = max(p.depth for p in pots)
    return [refine_depth(p, k) for p in pots]


def linear_combination(coeffs: Sequence[float], pots: Sequence[Potential]) -> Potential:
    _check_same_shift(*pots)
    refined = common_depth(*pots)
    vals = sum(c * p.values for c, p in zip(coeffs, refined))
    return Potential.from_values(refined[0].shift, refined[0].depth, vals)


def sup_difference(f: Potential, g: Potential) -> float:
    """max |f - g| over cylinders of the common depth."""
    _check_same_shift(f, g)
    F, G = common_depth(f, g)
    return float(np.max(np.abs(F.values - G.values)))


class Independence(str, enum.Enum):
    ASSUMED = "assumed"
    VERIFIED = "verified-nonarithmetic-witness"
    VIOLATED = "violated"


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Two strictly positive potentials on one shift, refined to a common depth."""

    f: Potential
    g: Potential
    independence: Independence = Independence.ASSUMED

    def __post_init__(self):
        _check_same_shift(self.f, self.g)
        if not (self.f.is_positive and self.g.is_positive):
            raise ValueError("pair potentials must be strictly positive")
        F, G = common_depth(self.f, self.g)
        object.__setattr__(self, "f", F)
        object.__setattr__(self, "g", G)
        object.__setattr__(self, "independence", Independence(self.independence))

    @property
    def shift(self) -> Shift:
        return self.f.shift

    @property
    def depth(self) -> int:
        return self.f.depth

    def swapped(self) -> "PotentialPair":
        return PotentialPair(self.g, self.f, self.independence)

    def combination(self, z1: float, z2: float) -> Potential:
        return Potential.from_values(self.shift, self.depth, z1 * self.f.values + z2 * self.g.values)

    def with_independence(self, flag) -> "PotentialPair":
        return PotentialPair(self.f, self.g, Independence(flag))

    def orbit_vectors(self, n_max: int, max_words: int = 200_000) -> np.ndarray:
        """Distinct (S_n f, S_n g) over Fix^n for n <= n_max (word cap applies)."""
        rows = []
        total = 0
        for n in range(1, n_max + 1):
            words = np.array([w.letters for w in enumerate_fix(self.shift, n)], dtype=np.int64)
            if words.size == 0:
                continue
            total += len(words)
            if total > max_words:
                break
            sf = ergodic_sums(self.f, words)
            sg = ergodic_sums(self.g, words)
            rows.append(np.column_stack([sf, sg]))
        vecs = np.vstack(rows)
        keys = np.round(vecs, 9)
        _, idx = np.unique(keys, axis=0, return_index=True)
        return vecs[np.sort(idx)]

    def is_proportional(self, n_max: int = 8, tol: float = 1e-10) -> bool:
        """True when every orbit-sum vector lies on one line through 0."""
        v = self.orbit_vectors(n_max)
        ref = v[np.argmax(np.hypot(v[:, 0], v[:, 1]))]
        cross = v[:, 0] * ref[1] - v[:, 1] * ref[0]
        scale = np.hypot(*ref) * np.hypot(v[:, 0], v[:, 1])
        return bool(np.all(np.abs(cross) <= tol * scale))


# ---------------------------------------------------------------------------
# truncation families and the entropy-gap series

RULES: dict = {
    "log": lambda a, scale=1.0, shift=1.0: scale * np.log(a + shift),
    "linear": lambda a, scale=1.0, offset=0.0: scale * a + offset,
    "power": lambda a, scale=1.0, exponent=1.0: scale * a**exponent,
}


@dataclass(frozen=True)
class TruncationFamily:
    """Letter values a -> S(f, a) for a = 1..N_max on the full N-shift.

    ``rule`` names an entry of :data:`RULES`; ``params`` are its keyword
    arguments.  ``2 ln(a+1)`` is ``TruncationFamily("log", {"scale": 2})``.
    """

    rule: str
    params: Mapping = field(default_factory=dict)
    N_max: int = 1 << 14

    def values(self, N: Optional[int] = None) -> np.ndarray:
        N = self.N_max if N is None else N
        if N > self.N_max:
            raise ValueError(f"N={N} exceeds N_max={self.N_max}")
        a = np.arange(1, N + 1, dtype=float)
        return np.asarray(RULES[self.rule](a, **dict(self.params)), dtype=float)

    def potential(self, N: int) -> Potential:
        """Depth-1 potential on the truncated full shift with letters 1..N."""
        return Potential.from_values(truncated_full_shift(N), 1, self.values(N))

    def to_dict(self) -> dict:
        return {"rule": self.rule, "params": dict(self.params), "N_max": self.N_max}


def entropy_gap_series(fam: TruncationFamily, s: float, N: int) -> float:
    """Partial sum of exp(-s S(f, a)) over a = 1..N, compensated."""
    if s <= 0:
        raise ValueError("s must be positive")
    return math.fsum(np.exp(-s * fam.values(N)).tolist())


DRIFT_RATIO = 0.8


@dataclass
class CriticalExponentEstimate:
    d_hat: float
    converges_for_all: bool
    slopes: dict
    bracket: tuple


def _block_slope(fam: TruncationFamily, s: float, N_grid: Sequence[int]) -> float:
    """Growth slope of the partial sums on the grid, per unit log N.

    Increments between consecutive grid points are divided by the log-width
    of the block, so a series whose terms decay like 1/a has slope 0.
    A slope >= 0 means the partial sums are not Cauchy on the grid.
    """
    terms = np.exp(-s * fam.values(max(N_grid)))
    csum = np.cumsum(terms)
    N = np.asarray(N_grid)
    inc = csum[N[1:] - 1] - csum[N[:-1] - 1]
    dens = inc / np.log(N[1:] / N[:-1])
    x = 0.5 * (np.log(N[1:]) + np.log(N[:-1]))
    if np.any(dens <= 0):
        return -np.inf
    y = np.log(dens)
    if len(x) == 1:
        return float(y[0])
    return float(np.polyfit(x, y, 1)[0])


def estimate_critical_exponent(
    fam: TruncationFamily,
    N_grid: Sequence[int],
    s_max: float = 20.0,
    tol: float = 1e-6,
) -> CriticalExponentEstimate:
    """Boundary between diverging and converging partial sums, by bisection on s.

    ``converges_for_all`` is reported when the sums converge already at a tiny
    s, or when the located boundary drifts towards 0 as the grid grows.

    Raises
    ------
    Inconclusive
        if the series still looks divergent at ``s_max``.
    """
    N_grid = sorted(int(N) for N in N_grid)
    if len(N_grid) < 3:
        raise ValueError("need at least three grid values")
    diverges = lambda s: _block_slope(fam, s, N_grid) >= 0.0
    slopes = {}
    lo, hi = 0.0, s_max
    if diverges(hi):
        raise Inconclusive(f"partial sums still grow at s={s_max}")
    probe = 1e-6
    slopes[probe] = _block_slope(fam, probe, N_grid)
    if slopes[probe] < 0:
        return CriticalExponentEstimate(0.0, True, slopes, (0.0, probe))
    lo = probe
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        slopes[mid] = _block_slope(fam, mid, N_grid)
        if slopes[mid] >= 0:
            lo = mid
        else:
            hi = mid
    d_hat = 0.5 * (lo + hi)
    # A true boundary does not move when the largest N is dropped; a
    # finite-size artefact of a series converging for every s > 0 shrinks
    # roughly like 1/N (or a power of it).
    if len(N_grid) >= 4:
        coarse = estimate_critical_exponent(fam, N_grid[:-1], s_max, tol)
        if coarse.converges_for_all or d_hat < DRIFT_RATIO * coarse.d_hat:
            return CriticalExponentEstimate(0.0, True, dict(sorted(slopes.items())), (0.0, d_hat))
    return CriticalExponentEstimate(d_hat, False, dict(sorted(slopes.items())), (lo, hi))


# ---------------------------------------------------------------------------
# arithmeticity witness


def _is_rational(x: float, max_den: int = 1000, tol: float = 1e-9) -> bool:
    fr = Fraction(x).limit_denominator(max_den)
    return abs(float(fr) - x) < tol


def arithmetic_witness(pair: PotentialPair, n_max: int, tol: float = 1e-9, maxcoeff: int = 1000) -> Independence:
    """Heuristic test of whether some a f + b g is arithmetic.

    Orbit-sum vectors v = (S_n f, S_n g) are written in a basis e1, e2 of two
    of them, v = alpha e1 + beta e2.  The pair is arithmetic exactly when some
    integers (k1, k2) != 0 make every alpha k1 + beta k2 an integer:

    * all vectors collinear, or all coordinates rational -> ``violated``;
    * integer relations for (alpha, beta, 1) found by PSLQ that disagree in
      direction, or a coordinate pair with no relation up to ``maxcoeff``
      -> ``verified`` (a non-arithmetic witness, within the bound);
    * otherwise ``assumed``.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    v = pair.orbit_vectors(n_max)
    norms = np.hypot(v[:, 0], v[:, 1])
    e1 = v[np.argmin(norms)]
    cross = (v[:, 0] * e1[1] - v[:, 1] * e1[0]) / (norms * np.hypot(*e1))
    if np.all(np.abs(cross) < 1e-10):
        return Independence.VIOLATED
    # second basis vector: shortest among those well away from e1's line
    off = np.abs(cross) > 1e-3
    cand = np.flatnonzero(off)
    e2 = v[cand[np.argmin(norms[cand])]]
    basis = np.column_stack([e1, e2])
    coords = np.linalg.solve(basis, v.T).T
    if all(_is_rational(c, tol=1e-8) for c in coords.ravel()):
        return Independence.VIOLATED
    directions = []
    with mpmath.workdps(20):
        for alpha, beta in coords:
            if _is_rational(alpha, tol=1e-8) and _is_rational(beta, tol=1e-8):
                continue
            rel = mpmath.pslq([alpha, beta, 1.0], tol=tol, maxcoeff=maxcoeff, maxsteps=10_000)
            if rel is None:
                return Independence.VERIFIED
            k1, k2 = rel[0], rel[1]
            if k1 == 0 and k2 == 0:
                continue
            directions.append((k1, k2))
    for d in directions[1:]:
        if d[0] * directions[0][1] - d[1] * directions[0][0] != 0:
            return Independence.VERIFIED
    if directions:
        return Independence.VIOLATED
    return Independence.ASSUMED
