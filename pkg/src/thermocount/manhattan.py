"""Manhattan curve P(-a f - b g) = 0, correlation numbers and Bishop-Steger entropy.

Slope convention: at the curve point (a, b) with equilibrium state mu, the
slope is ``m = int g dmu / int f dmu``.  The normal to the curve is then
parallel to (1, m), the counting window is (t, m t), and ``m`` increases
along the curve as a runs from 0 to delta_f.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from .convex import PressureSurface
from .errors import BracketFail, RootBracketFail, SlopeOutOfRange
from .potential import Independence, linear_combination
from .thermo import ROOT_RESIDUAL, bowen_root, bracketed_newton


@dataclass(frozen=True)
class CurvePoint:
    s: float
    q: float
    m: float
    H: float
    t_m: float
    x_m: tuple
    residual: float
    extended: bool = False

    @property
    def a(self) -> float:
        return self.s

    @property
    def b(self) -> float:
        return self.q


@dataclass
class ManhattanCurve:
    samples: list
    delta_f: float
    delta_g: float
    rigid: bool
    surface: PressureSurface = field(repr=False)
    warnings: list = field(default_factory=list)

    @property
    def s(self) -> np.ndarray:
        return np.array([p.s for p in self.samples])

    @property
    def q(self) -> np.ndarray:
        return np.array([p.q for p in self.samples])

    @property
    def m(self) -> np.ndarray:
        return np.array([p.m for p in self.samples])

    @property
    def H(self) -> np.ndarray:
        return np.array([p.H for p in self.samples])

    @property
    def slope_range(self) -> tuple:
        ms = self.m
        return float(ms.min()), float(ms.max())

    def secant_deviation(self) -> float:
        """max |s dg + q df - df dg| / dg over samples (0 on the straight line)."""
        dev = self.s * self.delta_g + self.q * self.delta_f - self.delta_f * self.delta_g
        return float(np.max(np.abs(dev)) / self.delta_g)

    def second_differences(self) -> np.ndarray:
        return np.diff(self.q, 2)

    def slope_consistency(self) -> float:
        """max |m - (-1/q'(s))| with q' from centred differences."""
        s, q, m = self.s, self.q, self.m
        dq = (q[2:] - q[:-2]) / (s[2:] - s[:-2])
        return float(np.max(np.abs(m[1:-1] + 1.0 / dq)))


def solve_q(surface: PressureSurface, s: float) -> float:
    """q with P(-s f - q g) = 0, by bracketed Newton in q."""
    g = surface.pair.g
    P0 = surface.value((-s, 0.0))
    if P0 >= 0:
        lo, hi = P0 / g.max, P0 / g.min
    else:
        lo, hi = P0 / g.min, P0 / g.max
    pad = 1e-9 * max(1.0, abs(lo), abs(hi))
    lo, hi = lo - pad, hi + pad

    def fun(q):
        r = surface.rpf((-s, -q))
        return r.pressure, -float(r.mu @ g.values)

    try:
        return bracketed_newton(fun, lo, hi, tol=1e-3 * ROOT_RESIDUAL)
    except BracketFail as exc:
        raise RootBracketFail(str(exc)) from exc


def curve_point(surface: PressureSurface, s: float, delta_f: Optional[float] = None) -> CurvePoint:
    q = solve_q(surface, s)
    r = surface.rpf((-s, -q))
    mf = float(r.mu @ surface.pair.f.values)
    mg = float(r.mu @ surface.pair.g.values)
    m = mg / mf
    extended = s < 0 or (delta_f is not None and s > delta_f)
    return CurvePoint(s, q, m, s + m * q, 1.0 / mf, (mf, mg), abs(r.pressure), extended)


def trace_curve(surface: PressureSurface, n_samples: int, extend: float = 0.0) -> ManhattanCurve:
    """Sample the curve on a uniform s-grid over [0, delta_f].

    ``extend`` > 0 widens the grid by that fraction on both sides where the
    root solve still converges; those samples are flagged ``extended``.
    A pair whose orbit-sum vectors are all collinear gives the straight
    secant and ``rigid=True``.
    """
    pair = surface.pair
    shift = surface.shift
    delta_f = bowen_root(shift, pair.f)
    delta_g = bowen_root(shift, pair.g)
    notes = []
    rigid = pair.is_proportional()
    if pair.independence == Independence.VIOLATED:
        msg = "pair flagged as violating independence; strict convexity is not guaranteed"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    s_grid = np.linspace(0.0, delta_f, n_samples)
    if extend > 0:
        ds = extend * delta_f
        s_grid = np.concatenate([[-ds], s_grid, [delta_f + ds]])
    samples = []
    for s in s_grid:
        try:
            samples.append(curve_point(surface, float(s), delta_f))
        except RootBracketFail:
            if 0.0 <= s <= delta_f:
                raise
            notes.append(f"extension failed at s={s}")
    return ManhattanCurve(samples, delta_f, delta_g, rigid, surface, notes)


def _rigid_point(curve: ManhattanCurve, m: float, tol: float = 1e-8) -> CurvePoint:
    ms = curve.m
    if np.max(np.abs(ms - m)) > tol * max(1.0, abs(m)):
        raise SlopeOutOfRange(f"rigid curve has constant slope {ms[0]}, requested {m}")
    return curve.samples[len(curve.samples) // 2]


def point_at_slope(curve: ManhattanCurve, m: float, tol: float = 1e-8) -> CurvePoint:
    """Curve point whose normal has slope m (monotone interpolation, then re-solve)."""
    if curve.rigid:
        return _rigid_point(curve, m, tol)
    s, ms = curve.s, curve.m
    order = np.argsort(ms)
    lo_m, hi_m = ms[order[0]], ms[order[-1]]
    if not (lo_m - tol <= m <= hi_m + tol):
        raise SlopeOutOfRange(f"slope {m} outside sampled range ({lo_m}, {hi_m})")
    exact = np.flatnonzero(np.abs(ms - m) <= 1e-14 * max(1.0, abs(m)))
    if exact.size:
        return curve.samples[int(exact[0])]
    inv = PchipInterpolator(ms[order], s[order])
    s0 = float(inv(np.clip(m, lo_m, hi_m)))
    i = int(np.searchsorted(ms[order], m))
    a = s[order][max(i - 1, 0)]
    b = s[order][min(i, len(s) - 1)]
    a, b = min(a, b, s0), max(a, b, s0)
    surface = curve.surface

    def mismatch(x):
        return curve_point(surface, x).m - m

    fa, fb = mismatch(a), mismatch(b)
    if fa == 0:
        return curve_point(surface, a)
    if fb == 0:
        return curve_point(surface, b)
    if np.sign(fa) == np.sign(fb):
        # clipped to an endpoint within tolerance
        x = a if abs(fa) < abs(fb) else b
        return curve_point(surface, x)
    x = brentq(mismatch, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return curve_point(surface, x)


def correlation_number(curve: ManhattanCurve, m: float) -> tuple:
    """(H, a_m, b_m) with H = a_m + m b_m."""
    pt = point_at_slope(curve, m)
    return pt.s + m * pt.q, pt.s, pt.q


def bishop_steger(surface: PressureSurface, alpha: float, beta: float) -> float:
    """Bowen root of alpha f + beta g."""
    if alpha < 0 or beta < 0 or alpha + beta == 0:
        raise ValueError("need alpha, beta >= 0, not both zero")
    pot = linear_combination((alpha, beta), (surface.pair.f, surface.pair.g))
    return bowen_root(surface.shift, pot)


@dataclass
class BishopStegerReport:
    alpha: float
    beta: float
    h_bs: float
    max_ratio: float
    argmax_m: float
    argmax_ab_ratio: float
    refined_max: float
    strict_margin: float
    degenerate: bool

    @property
    def max_error(self) -> float:
        return abs(self.max_ratio - self.h_bs)

    @property
    def ratio_error(self) -> float:
        target = self.alpha / self.beta if self.beta else math.inf
        return abs(self.argmax_ab_ratio - target)


def bs_inequality_scan(curve: ManhattanCurve, alpha: float, beta: float) -> BishopStegerReport:
    """Evaluate H(m)/(alpha + m beta) over the samples and compare with h_BS."""
    h_bs = bishop_steger(curve.surface, alpha, beta)
    s, q, m, H = curve.s, curve.q, curve.m, curve.H
    ratios = H / (alpha + m * beta)
    i = int(np.argmax(ratios))
    ab = s[i] / q[i] if q[i] != 0 else math.inf
    # continuous refinement between neighbouring samples
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
    if hi > lo and not curve.rigid:
        def neg(x):
            p = curve_point(curve.surface, x)
            return -p.H / (alpha + p.m * beta)

        refined = -float(minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}).fun)
    else:
        refined = float(ratios[i])
    others = np.delete(ratios, i)
    margin = float(h_bs - others.max()) if others.size else math.nan
    degenerate = bool(np.ptp(ratios) < 1e-12) if curve.rigid else False
    return BishopStegerReport(alpha, beta, h_bs, float(ratios[i]), float(m[i]), ab, refined, margin, degenerate)


def swap_check(curve_fg: ManhattanCurve, curve_gf: ManhattanCurve, m: float) -> float:
    """|H_{f,g}(m) - m H_{g,f}(1/m)|."""
    H1 = correlation_number(curve_fg, m)[0]
    H2 = correlation_number(curve_gf, 1.0 / m)[0]
    return abs(H1 - m * H2)


def rigidity_gap(curve: ManhattanCurve) -> tuple:
    """(m*, delta_f - H(m*)) with m* = delta_f / delta_g, the secant slope."""
    m_star = curve.delta_f / curve.delta_g
    H, _, _ = correlation_number(curve, m_star)
    return m_star, curve.delta_f - H
