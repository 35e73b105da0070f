"""Window counts of periodic words and preimages, growth fits and the local estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, InsufficientData
from .potential import PotentialPair, ergodic_sums
from .shift_core import (
    Cylinder,
    SampleWord,
    Shift,
    admissible_words,
    cylinders,
    enumerate_preimages,
    pick_sample_word,
    prefix_partitions,
)
from .thermo import gibbs_constant, rpf_data, transfer_matrix

DEFAULT_BUDGET = 5_000_000_000


@dataclass(frozen=True)
class WindowSpec:
    """Open box (t, t + xi) x (m t, m t + xi)."""

    m: float
    xi: float
    t: float

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError("window width must be positive")
        if self.m <= 0:
            raise ValueError("slope must be positive")

    def contains(self, F, G):
        t, m, xi = self.t, self.m, self.xi
        return (t < F) & (F < t + xi) & (m * t < G) & (G < m * t + xi)

    def widened(self, eps: float) -> "WindowSpec":
        """Box enlarged (eps > 0) or shrunk (eps < 0) by eps on every side.

        Expressed as a box with the same lower-left rule, the result is the
        rectangle (t - eps, t + xi + eps) x (m t - eps, m t + xi + eps); it is
        returned as a :class:`Box` because it is no longer of window shape.
        """
        return Box(self.t - eps, self.t + self.xi + eps, self.m * self.t - eps, self.m * self.t + self.xi + eps)


@dataclass(frozen=True)
class Box:
    f_lo: float
    f_hi: float
    g_lo: float
    g_hi: float

    def contains(self, F, G):
        return (self.f_lo < F) & (F < self.f_hi) & (self.g_lo < G) & (G < self.g_hi)


def n_range(pair: PotentialPair, t: float, xi: float) -> range:
    """Word lengths that can reach the window: [ceil(t/max f) - 1, floor((t+xi)/min f) + 1]."""
    lo = max(1, math.ceil(t / pair.f.max) - 1)
    hi = math.floor((t + xi) / pair.f.min) + 1
    return range(lo, hi + 1)


# ---------------------------------------------------------------------------
# compiled enumeration driver


@dataclass
class _Tables:
    T: np.ndarray
    k: int
    ftab: np.ndarray
    gtab: np.ndarray
    fmin: float
    fmax: float
    gmin: float
    gmax: float


def _tables(pair: PotentialPair) -> _Tables:
    f, g = pair.f, pair.g
    ftab = np.nan_to_num(f.code_table(), nan=0.0)
    gtab = np.nan_to_num(g.code_table(), nan=0.0)
    return _Tables(pair.shift.transitions.astype(np.bool_), pair.depth, ftab, gtab, f.min, f.max, g.min, g.max)


def _grid_counts(
    pair: PotentialPair,
    n: int,
    m: float,
    xi: float,
    t0: float,
    dt: float,
    nt: int,
    prefix: Sequence[int] = (),
    zhead: Optional[Sequence[int]] = None,
    budget: int = DEFAULT_BUDGET,
    threads: Optional[int] = None,
    target_parts: int = 64,
):
    """Exact counts on the t-grid for words of length n.

    ``zhead=None`` counts Fix^n; otherwise counts the preimages of the point
    whose first letters are ``zhead`` inside the cylinder ``prefix``.
    Returns ``(counts[nt], nodes)``.
    """
    tb = _tables(pair)
    shift = pair.shift
    cyclic = zhead is None
    zh = np.zeros(max(tb.k - 1, 1), dtype=np.int64)
    if not cyclic:
        zh[: len(zhead[: max(tb.k - 1, 1)])] = np.asarray(zhead[: max(tb.k - 1, 1)], dtype=np.int64)
    d_tab = tb.gtab - m * tb.ftab
    valid = pair.f.code_index >= 0
    dmin = float(d_tab[valid].min())
    dmax = float(d_tab[valid].max())
    if prefix and len(prefix) > n:
        raise ValueError("prefix longer than the word")
    parts = prefix_partitions(shift, n, target_parts, tuple(prefix))
    if threads is not None:
        _kernels.numba.set_num_threads(max(1, min(threads, _kernels.numba.config.NUMBA_NUM_THREADS)))
    chunk = max(1, 8 * _kernels.numba.get_num_threads())
    total = np.zeros(nt, dtype=np.int64)
    nodes = 0
    for start in range(0, len(parts), chunk):
        block = np.ascontiguousarray(parts[start : start + chunk])
        remaining = budget - nodes
        counts, nd, aborted = _kernels.count_partitions(
            tb.T, tb.k, tb.ftab, tb.gtab, n, block, cyclic, zh,
            float(t0), float(dt), int(nt), float(m), float(xi),
            tb.fmin, tb.fmax, tb.gmin, tb.gmax, dmin, dmax, int(remaining),
        )
        # rows merged in lexicographic prefix order
        for r in range(counts.shape[0]):
            total += counts[r]
        nodes += int(nd.sum())
        if aborted.any() or nodes > budget:
            raise BudgetExceeded(f"node budget {budget} exceeded at n={n}", nodes, total)
    return total, nodes


def count_fix_window(shift: Shift, pair: PotentialPair, spec: WindowSpec, n: int,
                     budget: int = DEFAULT_BUDGET, threads: Optional[int] = None) -> int:
    """#{x in Fix^n : (S_n f, S_n g)(x) in the open window}."""
    _same(shift, pair)
    counts, _ = _grid_counts(pair, n, spec.m, spec.xi, spec.t, 1.0, 1, budget=budget, threads=threads)
    return int(counts[0])


def count_W(shift: Shift, pair: PotentialPair, spec: WindowSpec, p: Cylinder, z_p, n: int,
            budget: int = DEFAULT_BUDGET, threads: Optional[int] = None) -> int:
    """Number of preimages y of z_p under sigma^n inside p with S_n f(y) in the window."""
    _same(shift, pair)
    if n < p.depth:
        raise ValueError("n must be at least the cylinder depth")
    zhead = _zhead(z_p, pair.depth)
    counts, _ = _grid_counts(pair, n, spec.m, spec.xi, spec.t, 1.0, 1, p.prefix, zhead, budget, threads)
    return int(counts[0])


def _zhead(z, k: int):
    z = z if isinstance(z, SampleWord) else SampleWord(tuple(z))
    return z.head(max(k - 1, 1))


def _same(shift, pair):
    if pair.shift is not shift:
        from .errors import ShiftMismatch

        raise ShiftMismatch("pair lives on another shift")


def count_M(shift: Shift, pair: PotentialPair, spec: WindowSpec,
            budget: int = DEFAULT_BUDGET, threads: Optional[int] = None):
    """M(t) = sum_n M(n, t)/n with the per-n breakdown."""
    _same(shift, pair)
    breakdown = {}
    for n in n_range(pair, spec.t, spec.xi):
        breakdown[n] = count_fix_window(shift, pair, spec, n, budget, threads)
    return math.fsum(c / n for n, c in breakdown.items()), breakdown


# ---------------------------------------------------------------------------
# unpruned oracle


def exhaustive_sums(pair: PotentialPair, n: int, prefix: Sequence[int] = (), zhead=None):
    """(S_n f, S_n g) for every word of the set, without pruning (small n only)."""
    words = admissible_words(pair.shift, n)
    if prefix:
        words = words[np.all(words[:, : len(prefix)] == np.asarray(prefix), axis=1)]
    T = pair.shift.transitions
    if zhead is None:
        words = words[T[words[:, -1], words[:, 0]]]
        return words, ergodic_sums(pair.f, words), ergodic_sums(pair.g, words)
    words = words[T[words[:, -1], zhead[0]]]
    return (words, ergodic_sums(pair.f, words, cyclic=False, zhead=zhead),
            ergodic_sums(pair.g, words, cyclic=False, zhead=zhead))


def exhaustive_count(pair: PotentialPair, window, n: int, prefix: Sequence[int] = (), zhead=None) -> int:
    _, F, G = exhaustive_sums(pair, n, prefix, zhead)
    return int(np.count_nonzero(window.contains(F, G)))


# ---------------------------------------------------------------------------
# scans and reports


@dataclass
class CountReport:
    """Window counts over a uniform t-grid for one slope and width."""

    m: float
    xi: float
    t: np.ndarray
    M_nt: Dict[int, np.ndarray]
    W_nt: Dict[str, Dict[int, np.ndarray]] = field(default_factory=dict)
    nodes: Dict[int, int] = field(default_factory=dict)
    n_lo: Optional[np.ndarray] = None
    n_hi: Optional[np.ndarray] = None
    truncated: bool = False
    t_complete: Optional[float] = None
    alpha_hat: Optional[float] = None
    stderr: Optional[float] = None

    @property
    def M_t(self) -> np.ndarray:
        """sum_n M(n, t)/n at every grid point (ordered sum over n)."""
        out = np.zeros(len(self.t))
        for n in sorted(self.M_nt):
            out = out + self.M_nt[n] / n
        return out

    def M_p_t(self, p: str) -> np.ndarray:
        out = np.zeros(len(self.t))
        for n in sorted(self.W_nt[p]):
            out = out + self.W_nt[p][n] / n
        return out

    @property
    def total_nodes(self) -> int:
        return int(sum(self.nodes.values()))

    def rows(self):
        """(t, n, M_n, {p: W_n_p}, M_t) rows for contributing (t, n)."""
        Mt = self.M_t
        for j, t in enumerate(self.t):
            for n in sorted(self.M_nt):
                if not (self.n_lo[j] <= n <= self.n_hi[j]):
                    continue
                W = {p: int(d[n][j]) for p, d in self.W_nt.items() if n in d}
                yield float(t), n, int(self.M_nt[n][j]), W, float(Mt[j])


def count_scan(
    shift: Shift,
    pair: PotentialPair,
    m: float,
    xi: float,
    t_values: Sequence[float],
    cylinders_W: Sequence[Cylinder] = (),
    z_words: Optional[dict] = None,
    budget: int = DEFAULT_BUDGET,
    threads: Optional[int] = None,
) -> CountReport:
    """Counts M(n, t) (and W(n, p, t) for the given cylinders) on a uniform t-grid.

    One enumeration per word length covers the whole grid.  Word lengths are
    processed in increasing order; if the node budget runs out the report is
    flagged ``truncated`` and ``t_complete`` records the largest t whose
    whole n-range was finished.
    """
    _same(shift, pair)
    t = np.asarray(t_values, dtype=float)
    if len(t) > 1:
        dt = float(t[-1] - t[0]) / (len(t) - 1)
        if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
            raise ValueError("t grid must be uniform")
    else:
        dt = 1.0
    t0, nt = float(t[0]), len(t)
    t = t0 + dt * np.arange(nt)
    n_lo = np.array([n_range(pair, tt, xi)[0] for tt in t])
    n_hi = np.array([n_range(pair, tt, xi)[-1] for tt in t])
    ns = range(int(n_lo.min()), int(n_hi.max()) + 1)
    report = CountReport(m, xi, t, {}, n_lo=n_lo, n_hi=n_hi)
    z_words = dict(z_words or {})
    used = 0
    for n in ns:
        try:
            counts, nodes = _grid_counts(pair, n, m, xi, t0, dt, nt, budget=budget - used, threads=threads)
            report.M_nt[n] = counts
            report.nodes[n] = nodes
            used += nodes
            for p in cylinders_W:
                if n < p.depth:
                    continue
                z = z_words.setdefault(str(p), pick_sample_word(shift, p))
                wc, wn = _grid_counts(pair, n, m, xi, t0, dt, nt, p.prefix, _zhead(z, pair.depth),
                                      budget - used, threads)
                report.W_nt.setdefault(str(p), {})[n] = wc
                used += wn
        except BudgetExceeded:
            report.truncated = True
            break
    done = max(report.M_nt) if report.M_nt else 0
    complete = t[n_hi <= done]
    report.t_complete = float(complete.max()) if complete.size else None
    if report.truncated and report.t_complete is not None:
        keep = t <= report.t_complete
        report.t = t[keep]
        report.n_lo, report.n_hi = n_lo[keep], n_hi[keep]
        report.M_nt = {n: c[keep] for n, c in report.M_nt.items()}
        report.W_nt = {p: {n: c[keep] for n, c in d.items()} for p, d in report.W_nt.items()}
    return report


def fit_growth_rate(report_or_t, M=None, t_window=None, prefactor_power: float = 0.0):
    """Least-squares slope of log(t^c M(t)) against t, with its standard error.

    ``prefactor_power`` c = 0 gives the plain log-linear fit; c = 1.5 removes
    the t^(-3/2) prefactor of the local estimate before fitting.  The default
    window is the upper half of the t-range.  Only t with M(t) > 0 are used.

    Raises
    ------
    InsufficientData
        with fewer than five positive values in the window.
    """
    if isinstance(report_or_t, CountReport):
        t = report_or_t.t
        M = report_or_t.M_t
    else:
        t = np.asarray(report_or_t, dtype=float)
        M = np.asarray(M, dtype=float)
    if t_window is None:
        mid = 0.5 * (t.min() + t.max())
        t_window = (mid, t.max())
    sel = (t >= t_window[0]) & (t <= t_window[1]) & (M > 0)
    if sel.sum() < 5:
        raise InsufficientData(f"only {int(sel.sum())} positive counts for t in [{float(t_window[0]):g}, {float(t_window[1]):g}]")
    x = t[sel]
    y = np.log(M[sel]) + prefactor_power * np.log(x)
    X = np.column_stack([x, np.ones_like(x)])
    coef, res, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    alpha = float(coef[0])
    stderr = float(math.sqrt(cov[0, 0]))
    if isinstance(report_or_t, CountReport):
        report_or_t.alpha_hat, report_or_t.stderr = alpha, stderr
    return alpha, stderr


def running_alpha(report: CountReport, prefactor_power: float = 0.0) -> np.ndarray:
    """Fit over all positive counts up to each t (NaN until five exist)."""
    out = np.full(len(report.t), np.nan)
    Mt = report.M_t
    for j in range(len(report.t)):
        try:
            out[j] = fit_growth_rate(report.t[: j + 1], Mt[: j + 1], (report.t[0], report.t[j]), prefactor_power)[0]
        except InsufficientData:
            pass
    return out


@dataclass
class DeviationProfile:
    t: np.ndarray
    near: np.ndarray
    far: np.ndarray
    epsilon: float
    t_m: float

    @property
    def far_fraction(self) -> np.ndarray:
        tot = self.near + self.far
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, self.far / tot, np.nan)

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.near > 0, self.far / self.near, np.nan)

    def is_decreasing(self) -> bool:
        """Far fraction non-increasing over t with positive total mass."""
        ff = self.far_fraction
        ff = ff[np.isfinite(ff)]
        return bool(np.all(np.diff(ff) <= 1e-15))


def deviation_profile(report: CountReport, t_m: float, epsilon: float) -> DeviationProfile:
    """Split the 1/n-weighted counts by whether |n/t - t_m| < epsilon."""
    near = np.zeros(len(report.t))
    far = np.zeros(len(report.t))
    for n in sorted(report.M_nt):
        w = report.M_nt[n] / n
        close = np.abs(n / report.t - t_m) < epsilon
        near += np.where(close, w, 0.0)
        far += np.where(close, 0.0, w)
    return DeviationProfile(report.t, near, far, epsilon, t_m)


# ---------------------------------------------------------------------------
# structural identities


@dataclass
class SandwichReport:
    n: int
    k: int
    eps: float
    M: int
    W_lower: int
    W_upper: int
    exact_path: bool

    @property
    def holds(self) -> bool:
        return self.W_lower <= self.M <= self.W_upper

    @property
    def equality(self) -> bool:
        return self.W_lower == self.M == self.W_upper


def epsilon_k(pair: PotentialPair, k: int) -> float:
    """Zero when the pair has depth <= k, else a conservative bound."""
    if pair.depth <= k:
        return 0.0
    extra = pair.depth - k
    return extra * max(pair.f.max - pair.f.min, pair.g.max - pair.g.min)


def sandwich_check(shift: Shift, pair: PotentialPair, spec: WindowSpec, k: int, n: int,
                   eps: Optional[float] = None) -> SandwichReport:
    """Compare M(n, U) with sum_p W(n, p, U -/+ eps) over k-cylinders (small n).

    For depth <= k and n >= k the bijection between periodic words in p and
    preimages of z_p in p preserves the sums exactly, so eps = 0.
    """
    if n < k:
        raise ValueError("n must be >= k")
    exact = eps is None and pair.depth <= k
    eps = epsilon_k(pair, k) if eps is None else eps
    M = exhaustive_count(pair, spec, n)
    lower = upper = 0
    for p in cylinders(shift, k):
        zh = _zhead(pick_sample_word(shift, p), max(pair.depth, 2))
        _, F, G = exhaustive_sums(pair, n, p.prefix, zh)
        lower += int(np.count_nonzero(spec.widened(-eps).contains(F, G)))
        upper += int(np.count_nonzero(spec.widened(eps).contains(F, G)))
    return SandwichReport(n, k, eps, M, lower, upper, exact)


def laplace_sum(pair: PotentialPair, p: Cylinder, z_p, n: int, z) -> float:
    """sum over preimages y of z_p in p of exp(<z, S_n (f, g)(y)>), by enumeration."""
    terms = [
        math.exp(z[0] * sf + z[1] * sg)
        for _, (sf, sg) in enumerate_preimages(pair.shift, z_p, n, p, (pair.f, pair.g))
    ]
    return math.fsum(terms)


def operator_side(pair: PotentialPair, p: Cylinder, z_p, n: int, z) -> float:
    """(L^n 1_p)(z_p) for the transfer matrix of z1 f + z2 g on K-cylinders, K = max(depth, |p|)."""
    from .potential import refine_depth

    K = max(pair.depth, p.depth)
    u = refine_depth(pair.combination(z[0], z[1]), K)
    L = transfer_matrix(pair.shift, u).entries
    basis = admissible_words(pair.shift, K)
    phi = np.all(basis[:, : p.depth] == np.asarray(p.prefix), axis=1).astype(float)
    v = np.linalg.matrix_power(L, n) @ phi
    zw = z_p.head(K) if isinstance(z_p, SampleWord) else tuple(z_p)[:K]
    return float(v[u.index_of(zw)])


def laplace_fourier_check(shift: Shift, pair: PotentialPair, p: Cylinder, z_p, n: int, z) -> float:
    """Relative residual between the enumerated Laplace sum and (L^n 1_p)(z_p)."""
    _same(shift, pair)
    if n < p.depth:
        raise ValueError("n must be >= |p|")
    lhs = laplace_sum(pair, p, z_p, n, z)
    rhs = operator_side(pair, p, z_p, n, z)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


@dataclass
class GibbsBoundReport:
    ratios: dict
    Q_hat: float
    mu_p: float

    @property
    def max_ratio(self) -> float:
        return max(self.ratios.values())

    @property
    def holds(self) -> bool:
        return self.max_ratio <= 1 + 1e-9


def gibbs_bound_check(shift: Shift, pair: PotentialPair, p: Cylinder, z, n_range_, z_p=None,
                      gibbs_depth: int = 10) -> GibbsBoundReport:
    """Ratios W_hat(n, p, z) / (Q mu_z(p) exp(n P(z))) for n in the range."""
    _same(shift, pair)
    u = pair.combination(z[0], z[1])
    rpf = rpf_data(shift, u)
    Q = gibbs_constant(shift, u, rpf, max(gibbs_depth, u.depth))
    z_p = pick_sample_word(shift, p) if z_p is None else z_p
    mu_p = rpf.cylinder_measure(p.prefix)
    ratios = {}
    for n in n_range_:
        W = laplace_sum(pair, p, z_p, n, z)
        ratios[n] = W / (Q * mu_p * math.exp(n * rpf.pressure))
    return GibbsBoundReport(ratios, Q, mu_p)


# ---------------------------------------------------------------------------
# local estimate


def window_factor(a: float, xi: float) -> float:
    """Integral of exp(a s) over (0, xi); tends to xi as a -> 0."""
    if abs(a * xi) < 1e-8:
        return xi * (1 + 0.5 * a * xi)
    return math.expm1(a * xi) / a


def local_estimate_formula(t, H, pbar2, C_p, a, b, xi):
    """exp(tH) t^(-3/2) (2 pi pbar2)^(-1/2) C_p int_0^xi e^{a s} ds int_0^xi e^{b s} ds."""
    t = np.asarray(t, dtype=float)
    return (np.exp(t * H) / t**1.5 / math.sqrt(2 * math.pi * pbar2)
            * C_p * window_factor(a, xi) * window_factor(b, xi))


@dataclass
class LocalEstimate:
    m: float
    H: float
    a: float
    b: float
    t_m: float
    pbar2: float
    pbar2_legendre: float
    det_hess: float
    C_p: float
    xi: float

    def predict(self, t):
        return local_estimate_formula(t, self.H, self.pbar2, self.C_p, self.a, self.b, self.xi)

    @property
    def constant(self) -> float:
        """Prediction multiplied by t^(3/2) exp(-tH)."""
        return float(self.predict(1.0) * math.exp(-self.H))


def local_estimate(curve, m: float, p: Cylinder, z_p, xi: float, form: str = "suspension") -> LocalEstimate:
    """Constants of the local estimate at slope m for the cylinder p.

    ``form="suspension"`` uses the second derivative of the pressure along
    the window direction, ``t_m (m, -1) Hess P(z_m) (m, -1)^T``; this is what
    the Gaussian local limit gives and stays finite for a degenerate Hessian.
    ``form="legendre"`` uses ``t_m^3 x_m^T Hess P*(x_m) x_m``, which differs
    from the first by the factor ``det Hess P(z_m)``.
    """
    from .manhattan import point_at_slope

    surface = curve.surface
    pt = point_at_slope(curve, m)
    z_m = (-pt.s, -pt.q)
    rpf = surface.rpf(z_m)
    Hs = surface.hess(z_m)
    v = np.array([m, -1.0])
    pbar_susp = pt.t_m * float(v @ Hs @ v)
    det = float(np.linalg.det(Hs))
    x_m = np.array(pt.x_m)
    if det > 1e-12 * float(np.trace(Hs)) ** 2:
        pbar_leg = pt.t_m**3 * float(x_m @ np.linalg.inv(Hs) @ x_m)
    else:
        pbar_leg = math.inf
    pbar = pbar_susp if form == "suspension" else pbar_leg
    K = rpf.depth
    zw = z_p.head(K) if isinstance(z_p, SampleWord) else tuple(z_p)[:K]
    h_z = float(rpf.h[rpf.potential.index_of(zw)])
    nu_p = _nu_of(rpf, p)
    H = pt.s + m * pt.q
    return LocalEstimate(m, H, pt.s, pt.q, pt.t_m, pbar, pbar_leg, det, h_z * nu_p, xi)


def _nu_of(rpf, p: Cylinder) -> float:
    if p.depth >= rpf.depth:
        return rpf.nu_cylinder(p.prefix)
    words = admissible_words(rpf.potential.shift, rpf.depth)
    mask = np.all(words[:, : p.depth] == np.asarray(p.prefix), axis=1)
    return float(rpf.nu[mask].sum())


def local_estimate_prediction(curve, m: float, p: Cylinder, z_p, xi: float, t, form: str = "suspension"):
    """Predicted M_p(t) from the local estimate."""
    return local_estimate(curve, m, p, z_p, xi, form).predict(t)
