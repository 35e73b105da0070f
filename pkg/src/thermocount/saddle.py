"""Two-dimensional saddle-point leading term and a quadrature check.

A problem is the integral of ``G(i theta) exp(n F(i theta))`` over the disc
``|theta| < epsilon``, where F is real analytic with a critical point at 0
and positive definite Hessian there.  Callbacks receive ``theta`` with shape
``(..., 2)`` and return the values of F and G *on the imaginary axis*.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GridTooCoarse, NotPositiveDefinite


@dataclass
class SaddleProblem:
    F0: float
    grad0: np.ndarray
    hess0: np.ndarray
    F_on_axis: Optional[Callable] = None
    G_on_axis: Callable = field(default=lambda th: np.ones(th.shape[:-1]))
    G0: complex = 1.0
    epsilon: float = 1.0
    n: float = 1.0
    G_lipschitz: Optional[float] = None
    G_sup: Optional[float] = None

    def check(self) -> None:
        if np.max(np.abs(self.grad0)) > 1e-10:
            raise ValueError("grad F(0) must vanish")
        H = np.asarray(self.hess0, dtype=float)
        if not np.allclose(H, H.T) or np.linalg.eigvalsh(H)[0] <= 0:
            raise NotPositiveDefinite(f"Hessian eigenvalues {np.linalg.eigvalsh(0.5 * (H + H.T))}")

    def with_n(self, n: float) -> "SaddleProblem":
        return SaddleProblem(self.F0, self.grad0, self.hess0, self.F_on_axis, self.G_on_axis,
                             self.G0, self.epsilon, n, self.G_lipschitz, self.G_sup)


def saddle_leading_term(problem: SaddleProblem) -> complex:
    """exp(n F(0)) G(0) 2 pi / (n sqrt(det Hess F(0)))."""
    problem.check()
    det = float(np.linalg.det(problem.hess0))
    n = problem.n
    return math.exp(n * problem.F0) * problem.G0 * 2 * math.pi / (n * math.sqrt(det))


def quadrature_oracle(problem: SaddleProblem, grid_step: float, tile_rows: int = 256) -> complex:
    """Tensor midpoint rule for the disc integral, summed tile by tile in order.

    Raises
    ------
    GridTooCoarse
        if ``grid_step > epsilon / (4 sqrt(n))``.
    """
    eps, n = problem.epsilon, problem.n
    if grid_step > eps / (4 * math.sqrt(n)):
        raise GridTooCoarse(f"step {grid_step} exceeds {eps / (4 * math.sqrt(n))}")
    if problem.F_on_axis is None:
        raise ValueError("quadrature needs an explicit extension of F")
    N = int(math.ceil(2 * eps / grid_step))
    h = 2 * eps / N
    nodes = -eps + h * (np.arange(N) + 0.5)
    partial = []
    for r0 in range(0, N, tile_rows):
        th1 = nodes[r0 : r0 + tile_rows]
        th = np.stack(np.meshgrid(th1, nodes, indexing="ij"), axis=-1)
        inside = (th**2).sum(axis=-1) < eps**2
        vals = problem.G_on_axis(th) * np.exp(n * problem.F_on_axis(th))
        partial.append(np.sum(np.where(inside, vals, 0.0)))
    return complex(sum(partial)) * h * h


# ---------------------------------------------------------------------------
# test problems with explicit extensions


def gaussian_problem(n: float, epsilon: float = 1.0, hess=None, G=None, G0=1.0) -> SaddleProblem:
    """F(theta) = theta^T A theta / 2, so F(i theta) = -theta^T A theta / 2."""
    A = np.eye(2) if hess is None else np.asarray(hess, dtype=float)
    Fax = lambda th: -0.5 * np.einsum("...i,ij,...j->...", th, A, th)
    Gax = G if G is not None else (lambda th: np.full(th.shape[:-1], G0, dtype=complex))
    return SaddleProblem(0.0, np.zeros(2), A, Fax, Gax, G0, epsilon, n)


def quartic_problem(n: float, c: float = 0.1, epsilon: float = 1.0) -> SaddleProblem:
    """F(theta) = |theta|^2/2 + c (theta . theta)^2, so F(i theta) = -|theta|^2/2 + c |theta|^4."""
    Fax = lambda th: -0.5 * (th**2).sum(axis=-1) + c * (th**2).sum(axis=-1) ** 2
    return SaddleProblem(0.0, np.zeros(2), np.eye(2), Fax, lambda th: np.ones(th.shape[:-1], dtype=complex),
                         1.0, epsilon, n)


def odd_problem(n: float, epsilon: float = 1.0) -> SaddleProblem:
    """Gaussian F with G(theta) = 1 + theta_1, so G(i theta) = 1 + i theta_1."""
    G = lambda th: 1.0 + 1j * th[..., 0]
    return gaussian_problem(n, epsilon, G=G, G0=1.0)


def lipschitz_problem(n: float, epsilon: float = 1.0) -> SaddleProblem:
    """Gaussian F with the Lipschitz (non-smooth) amplitude G = 1 + |theta|."""
    G = lambda th: 1.0 + np.sqrt((th**2).sum(axis=-1)) + 0j
    p = gaussian_problem(n, epsilon, G=G, G0=1.0)
    p.G_lipschitz, p.G_sup = 1.0, 1.0 + epsilon
    return p


def pressure_problem(surface, x, n: float, epsilon: float = 0.5) -> SaddleProblem:
    """F(y) = <x, y - z> + P(z - y) with grad P(z) = x, so F(0) = -P*(x).

    Only the leading term is meaningful: the complex extension of the
    pressure is not evaluated.
    """
    from .convex import legendre

    lp = legendre(surface, x)
    return SaddleProblem(-lp.pstar, np.zeros(2), lp.hess, None, lambda th: np.ones(th.shape[:-1]),
                         1.0, epsilon, n)


def relative_error(problem: SaddleProblem, grid_step: Optional[float] = None) -> float:
    step = grid_step if grid_step is not None else problem.epsilon / (16 * math.sqrt(problem.n))
    q = quadrature_oracle(problem, step)
    lead = saddle_leading_term(problem)
    return abs(q - lead) / abs(lead)
