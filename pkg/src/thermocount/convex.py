"""Two-parameter pressure surface z -> P(z1 f + z2 g) and its Legendre transform."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NonConvergence, OutsideGradientRange
from .potential import PotentialPair
from .thermo import RpfData, rpf_data

HESS_STEP = 1e-4
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 200
MAX_BACKTRACKS = 40
# |z| * max(f, g) beyond this makes transfer-matrix entries underflow
EXP_RANGE = 600.0


class PressureSurface:
    """Memoised evaluation of P(z1 f + z2 g) and its first two derivatives.

    The memo is guarded by a lock, so one surface can be shared by threads.
    For finite alphabets the pressure is finite everywhere; the domain on which
    a countable shift would need ``d(-(z1 f + z2 g)) < 1`` is not enforced.
    """

    def __init__(self, pair: PotentialPair):
        self.pair = pair
        self.shift = pair.shift
        self._rpf: dict = {}
        self._lock = threading.Lock()

    def rpf(self, z) -> RpfData:
        key = (float(z[0]), float(z[1]))
        with self._lock:
            hit = self._rpf.get(key)
        if hit is None:
            hit = rpf_data(self.shift, self.pair.combination(*key))
            with self._lock:
                self._rpf[key] = hit
        return hit

    def value(self, z) -> float:
        return self.rpf(z).pressure

    def grad(self, z) -> np.ndarray:
        r = self.rpf(z)
        return np.array([r.mu @ self.pair.f.values, r.mu @ self.pair.g.values])

    def hess(self, z, step: float = HESS_STEP) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        H = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            H[:, j] = (self.grad(z + e) - self.grad(z - e)) / (2 * step)
        return 0.5 * (H + H.T)

    def domain_report(self) -> dict:
        """The finiteness guard is void for finite alphabets."""
        return {"finite_alphabet": True, "domain_enforced": False}


def grad_pressure(surface: PressureSurface, z) -> np.ndarray:
    """(int f dmu_z, int g dmu_z)."""
    return surface.grad(z)


def hess_pressure(surface: PressureSurface, z) -> np.ndarray:
    """Central differences of the analytic gradient, symmetrised."""
    return surface.hess(z)


def covariance_hessian(surface: PressureSurface, z) -> np.ndarray:
    """Asymptotic covariance of (S_n f, S_n g)/sqrt(n) under mu_z.

    Uses the fundamental matrix of the forward chain on k-cylinders,
    ``Sigma = A + A^T - Fc^T diag(pi) Fc`` with ``A = Fc^T diag(pi) Z Fc`` and
    ``Z = (I - P + 1 pi^T)^-1``.
    Independent of the finite-difference route, so it serves as a check.
    """
    r = surface.rpf(z)
    P = r.forward_chain()
    pi = r.mu
    n = len(pi)
    Z = np.linalg.inv(np.eye(n) - P + np.outer(np.ones(n), pi))
    F = np.column_stack([surface.pair.f.values, surface.pair.g.values])
    Fc = F - pi @ F
    A = Fc.T @ (pi[:, None] * (Z @ Fc))
    return A + A.T - Fc.T @ (pi[:, None] * Fc)


@dataclass
class LegendrePoint:
    x: np.ndarray
    z: np.ndarray
    pstar: float
    hess: np.ndarray
    hess_star: np.ndarray
    iterations: int
    degenerate: bool = False

    def young_residual(self, surface: PressureSurface) -> float:
        return abs(self.pstar + surface.value(self.z) - float(self.x @ self.z))


def legendre(surface: PressureSurface, x, z0=None, tol: float = NEWTON_TOL) -> LegendrePoint:
    """Solve grad P(z) = x by damped Newton and return the conjugate data.

    Steps use a least-squares solve so that a rank-deficient Hessian still
    yields the minimum-norm step; such points are flagged ``degenerate`` and
    their ``hess_star`` is a pseudo-inverse.

    Raises
    ------
    OutsideGradientRange
        if the residual cannot be driven below ``tol`` in 200 iterations.
    """
    x = np.asarray(x, dtype=float)
    z = np.zeros(2) if z0 is None else np.asarray(z0, dtype=float).copy()
    r = surface.grad(z) - x
    res = float(np.linalg.norm(r))
    z_cap = EXP_RANGE / max(surface.pair.f.max, surface.pair.g.max)
    it = 0
    while res >= tol:
        it += 1
        if it > NEWTON_MAX_ITER:
            raise OutsideGradientRange(f"no convergence for x={x.tolist()}, residual {res:.2e}")
        H = surface.hess(z)
        step = np.linalg.lstsq(H, -r, rcond=1e-10)[0]
        lam = 1.0
        for _ in range(MAX_BACKTRACKS):
            z_new = z + lam * step
            if not np.all(np.isfinite(z_new)) or np.max(np.abs(z_new)) > z_cap:
                lam *= 0.5
                continue
            try:
                r_new = surface.grad(z_new) - x
            except NonConvergence as exc:
                raise OutsideGradientRange(f"iterates left the numerical range for x={x.tolist()}") from exc
            res_new = float(np.linalg.norm(r_new))
            if np.isfinite(res_new) and res_new < res:
                break
            lam *= 0.5
        else:
            raise OutsideGradientRange(f"line search failed for x={x.tolist()}, residual {res:.2e}")
        if np.max(np.abs(z_new)) > 0.5 * z_cap:
            raise OutsideGradientRange(f"iterates diverged for x={x.tolist()}")
        z, r, res = z_new, r_new, res_new
    H = surface.hess(z)
    eig = np.linalg.eigvalsh(H)
    degenerate = bool(eig[0] <= 1e-9 * max(eig[1], 1e-300))
    hess_star = np.linalg.pinv(H) if degenerate else np.linalg.inv(H)
    pstar = float(x @ z) - surface.value(z)
    return LegendrePoint(x, z, pstar, H, hess_star, it, degenerate)


def pstar(surface: PressureSurface, x, z0=None) -> float:
    return legendre(surface, x, z0).pstar


@dataclass
class Profile:
    m: float
    t: np.ndarray
    values: np.ndarray
    skipped: list
    t_hat: float
    max_value: float
    derivative_at_max: float


def profile_neg_t_pstar(surface: PressureSurface, m: float, t_grid: Sequence[float], z0=None) -> Profile:
    """Samples of t -> -t P*((1, m)/t) and the refined maximiser.

    Samples whose target lies outside the gradient range are skipped and
    listed in ``skipped``.  The maximiser is refined by bounded scalar search
    between the neighbours of the best sample; its derivative equals
    ``P(grad P*(x/t))`` there.
    """
    xdir = np.array([1.0, m])
    ts, vals, skipped = [], [], []
    guess = z0
    for t in t_grid:
        try:
            lp = legendre(surface, xdir / t, guess)
        except OutsideGradientRange:
            skipped.append(float(t))
            continue
        guess = lp.z
        ts.append(float(t))
        vals.append(-t * lp.pstar)
    ts = np.asarray(ts)
    vals = np.asarray(vals)
    if len(ts) == 0:
        return Profile(m, ts, vals, skipped, math.nan, math.nan, math.nan)
    i = int(np.argmax(vals))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, len(ts) - 1)]
    z_best = [legendre(surface, xdir / ts[i], guess).z]

    def neg(t):
        lp = legendre(surface, xdir / t, z_best[0])
        z_best[0] = lp.z
        return t * lp.pstar

    if hi > lo:
        opt = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        t_hat = float(opt.x)
    else:
        t_hat = float(ts[i])
    lp = legendre(surface, xdir / t_hat, z_best[0])
    deriv = surface.value(lp.z)
    return Profile(m, ts, vals, skipped, t_hat, -t_hat * lp.pstar, deriv)
