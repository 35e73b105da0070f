"""Transfer matrices, pressure, Perron eigendata and Bowen roots."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BracketFail, NonConvergence
from .potential import Potential, refine_depth
from .shift_core import Shift, admissible_words, cylinders

EIGEN_RTOL = 1e-13
EIGEN_RESIDUAL = 1e-12
ROOT_RESIDUAL = 1e-12
DENSE_START_MAX = 512
MAX_POWER_ITER = 100_000


@functools.lru_cache(maxsize=64)
def _structure(shift: Shift, k: int):
    """Sparsity pattern of the depth-k transfer matrix: (rows q, cols p)."""
    words = admissible_words(shift, k)
    A = shift.alphabet_size
    if k == 1:
        p, q = np.nonzero(shift.transitions)
        return q, p
    # p maps into q when p[1:] == q[:-1]
    w = A ** np.arange(k - 2, -1, -1, dtype=np.int64)
    tail_code = words[:, 1:] @ w
    head_code = words[:, :-1] @ w
    order = np.argsort(head_code, kind="stable")
    sorted_heads = head_code[order]
    rows, cols = [], []
    for p_idx, code in enumerate(tail_code):
        lo = np.searchsorted(sorted_heads, code, "left")
        hi = np.searchsorted(sorted_heads, code, "right")
        for q_idx in order[lo:hi]:
            rows.append(q_idx)
            cols.append(p_idx)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    srt = np.lexsort((cols, rows))
    return rows[srt], cols[srt]


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Action of the transfer operator on depth-k locally constant functions.

    ``entries[q, p] = exp(u(p))`` whenever the cylinder p is a one-step
    preimage cylinder of q, so that ``(L phi)[q] = sum_p entries[q, p] phi[p]``.
    """

    depth: int
    basis: list
    entries: np.ndarray

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return self.entries @ phi


def transfer_matrix(shift: Shift, u: Potential) -> TransferMatrix:
    if u.shift is not shift:
        from .errors import ShiftMismatch

        raise ShiftMismatch("potential lives on another shift")
    return TransferMatrix(u.depth, cylinders(shift, u.depth), _dense_matrix(shift, u.depth, u.values))


def _dense_matrix(shift: Shift, k: int, values: np.ndarray, offset: float = 0.0) -> np.ndarray:
    """Transfer matrix of ``values - offset``, i.e. ``exp(-offset) L_u``."""
    rows, cols = _structure(shift, k)
    n = len(values)
    L = np.zeros((n, n))
    L[rows, cols] = np.exp(values[cols] - offset)
    return L


def _power_iteration(M: np.ndarray, tol: float = EIGEN_RTOL, max_iter: int = MAX_POWER_ITER):
    """Perron root and positive eigenvector of a primitive nonnegative matrix.

    Small matrices start from the dense Perron vector, so the iteration only
    certifies the residual; this matters near reducibility, where the ratio
    of the top two eigenvalues approaches 1.
    """
    n = M.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    if 1 < n <= DENSE_START_MAX and np.all(np.isfinite(M)):
        ev, vecs = np.linalg.eig(M)
        top = np.abs(vecs[:, np.argmax(ev.real)].real)
        if np.all(np.isfinite(top)) and top.sum() > 0:
            v = top / np.linalg.norm(top) + 1e-300
    lam = 0.0
    res = np.inf
    for it in range(1, max_iter + 1):
        w = M @ v
        lam = float(v @ w) / float(v @ v)
        if not lam > 0:
            raise NonConvergence("Perron root vanished (entries underflowed?)")
        res = float(np.linalg.norm(w - lam * v)) / (lam * float(np.linalg.norm(v)))
        v = w / np.linalg.norm(w)
        if res < tol:
            break
    if res > EIGEN_RESIDUAL or not np.isfinite(lam) or lam <= 0:
        raise NonConvergence(f"power iteration residual {res:.2e} after {it} steps")
    # one Rayleigh update from the final normalised iterate
    w = M @ v
    lam = float(v @ w) / float(v @ v)
    return lam, np.abs(v)


def pressure(shift: Shift, u: Potential) -> float:
    """P(u) as log of the Perron root of the transfer matrix."""
    offset = float(u.values.max())
    lam, _ = _power_iteration(_dense_matrix(shift, u.depth, u.values, offset))
    return math.log(lam) + offset


@dataclass(frozen=True, eq=False)
class RpfData:
    """Perron eigendata of the transfer matrix of u on its k-cylinder basis.

    ``matrix`` and ``lam`` belong to ``u - max u`` so they stay in range;
    ``pressure`` is that of u itself.
    """

    pressure: float
    lam: float
    h: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    gap: float
    potential: Potential
    matrix: np.ndarray

    @property
    def depth(self) -> int:
        return self.potential.depth

    @property
    def basis(self) -> list:
        return cylinders(self.potential.shift, self.depth)

    def integral(self, phi: Potential) -> float:
        """Integral of a locally constant function against the equilibrium state."""
        k = max(phi.depth, self.depth)
        if k > self.depth:
            raise ValueError("integrand deeper than the eigendata basis")
        return float(self.mu @ refine_depth(phi, k).values)

    def entropy(self) -> float:
        """Measure-theoretic entropy of mu as P(u) - int u dmu."""
        return self.pressure - float(self.mu @ self.potential.values)

    def residuals(self) -> tuple:
        L = self.matrix
        r_h = np.linalg.norm(L @ self.h - self.lam * self.h) / (self.lam * np.linalg.norm(self.h))
        r_nu = np.linalg.norm(self.nu @ L - self.lam * self.nu) / (self.lam * np.linalg.norm(self.nu))
        return float(r_h), float(r_nu)

    def invariance_residual(self) -> float:
        """max_q |mu(q) - sum_a mu([a q])| at the cylinder level."""
        pushed = self.nu * (self.matrix @ self.h) / self.lam
        return float(np.max(np.abs(pushed - self.mu)))

    def forward_chain(self) -> np.ndarray:
        """Stochastic matrix of the equilibrium state on k-cylinders.

        ``P[p, q] = nu(q) L[q, p] / (lam nu(p))`` is the probability that the
        next k-cylinder is q given the current one is p.
        """
        L = self.matrix
        return (self.nu[None, :] * L.T) / (self.lam * self.nu[:, None])

    def cylinder_measure(self, word: Sequence[int]) -> float:
        """mu([word]) for a cylinder of any depth."""
        k = self.depth
        pot = self.potential
        n = len(word)
        if n < k:
            words = admissible_words(pot.shift, k)
            mask = np.all(words[:, :n] == np.asarray(word), axis=1)
            return float(self.mu[mask].sum())
        return float(self.h[pot.index_of(word[:k])] * self.nu_cylinder(word))

    def nu_cylinder(self, word: Sequence[int]) -> float:
        """nu([word]) for |word| >= k from the conformality relation."""
        k = self.depth
        pot = self.potential
        n = len(word)
        expo = math.fsum(pot(word[i : i + k]) for i in range(n - k)) - (n - k) * self.pressure
        return math.exp(expo) * float(self.nu[pot.index_of(word[n - k :])])


def rpf_data(shift: Shift, u: Potential) -> RpfData:
    """Pressure, eigenfunction h, eigenmeasure nu, mu = h nu and spectral gap.

    Normalisation: ``sum(nu) = 1`` and ``sum(h * nu) = 1``.
    """
    offset = float(u.values.max())
    L = _dense_matrix(shift, u.depth, u.values, offset)
    lam_r, h = _power_iteration(L)
    lam_l, nu = _power_iteration(L.T)
    lam = 0.5 * (lam_r + lam_l)
    nu = nu / nu.sum()
    h = h / float(h @ nu)
    mu = h * nu
    mu = mu / mu.sum()
    if len(L) > 1:
        ev = np.linalg.eigvals(L)
        mods = np.sort(np.abs(ev))[::-1]
        gap = float(mods[1] / mods[0])
    else:
        gap = 0.0
    return RpfData(math.log(lam) + offset, lam, h, nu, mu, gap, u, L)


def gibbs_constant(shift: Shift, u: Potential, rpf: RpfData, n_max: int, n_min: int = 1) -> float:
    """Largest two-sided ratio between mu([w]) and exp(S_n u(x) - nP).

    x runs over one canonical point per n-cylinder: the cylinder word
    continued by the lexicographically least admissible letters.
    """
    k = u.depth
    if n_max < k:
        raise ValueError("n_max must be at least the potential depth")
    T = shift.transitions
    P = rpf.pressure
    Q = 1.0
    for n in range(n_min, n_max + 1):
        for w in admissible_words(shift, n):
            word = [int(a) for a in w]
            ext = list(word)
            while len(ext) < n + k - 1:
                ext.append(int(np.flatnonzero(T[ext[-1]])[0]))
            S = math.fsum(u(ext[i : i + k]) for i in range(n))
            mu_w = rpf.cylinder_measure(word)
            r = math.exp(S - n * P) / mu_w
            Q = max(Q, r, 1.0 / r)
    return Q


def bracketed_newton(
    fun: Callable[[float], tuple],
    lo: float,
    hi: float,
    tol: float = ROOT_RESIDUAL,
    max_iter: int = 200,
) -> float:
    """Root of a monotone function given ``fun(x) -> (value, derivative)``.

    Newton steps are accepted when they stay inside the current bracket,
    otherwise the bracket is bisected.  Stops on ``|value| < tol`` or when the
    bracket collapses to a few ulps.
    """
    f_lo, _ = fun(lo)
    f_hi, _ = fun(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketFail(f"no sign change on [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    best = (np.inf, x)
    for _ in range(max_iter):
        fx, dfx = fun(x)
        if abs(fx) < best[0]:
            best = (abs(fx), x)
        if abs(fx) < tol:
            return x
        if np.sign(fx) == np.sign(f_lo):
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        step = x - fx / dfx if dfx != 0 else np.nan
        if np.isfinite(step) and lo < step < hi:
            x = step
        else:
            x = 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            break
    return best[1]


def bowen_root(shift: Shift, f: Potential) -> float:
    """Unique s with P(-s f) = 0 for strictly positive f.

    Raises
    ------
    BracketFail
        if P(0) <= 0, in which case no positive root exists.
    """
    if not f.is_positive:
        raise ValueError("Bowen root needs a strictly positive potential")
    zero = f * 0.0
    P0 = pressure(shift, zero)
    if P0 <= 0:
        raise BracketFail("P(0) <= 0: the shift has no entropy")
    lo, hi = P0 / f.max, P0 / f.min

    def fun(s):
        rpf = rpf_data(shift, f * (-s))
        return rpf.pressure, -float(rpf.mu @ f.values)

    # P(-s f) is between P0 - s max f and P0 - s min f, so [lo, hi] brackets
    lo = max(0.0, lo * (1 - 1e-12))
    hi = hi * (1 + 1e-12)
    return bracketed_newton(fun, lo, hi)
