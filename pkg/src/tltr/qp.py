"""Approximate solvers for the trust-region subproblem

    min_p  m(p) = f0 + <g, p> + 1/2 <p, H p>   s.t.  ||p|| <= radius.

``H`` is only ever accessed through ``QuadraticModel.h_vec``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize


class ConvergedError(ValueError):
    """The model gradient is zero; there is no descent step to compute."""


@dataclass
class QuadraticModel:
    g: np.ndarray
    h_vec: Callable[[np.ndarray], np.ndarray]
    radius: float
    f0: float = 0.0

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @classmethod
    def from_matrix(cls, g, h, radius, f0=0.0) -> "QuadraticModel":
        h = np.asarray(h, dtype=float)
        model = cls(g, lambda v: h @ v, radius, f0)
        model.h = h
        return model

    def value(self, p) -> float:
        return self.f0 + self.g @ p + 0.5 * p @ self.h_vec(p)

    def decrease(self, p) -> float:
        """m(0) - m(p), computed directly (one extra ``h_vec``)."""
        return -(self.g @ p + 0.5 * p @ self.h_vec(p))


@dataclass
class QpStep:
    p: np.ndarray
    model_decrease: float
    boundary_hit: bool
    iterations: int


def boundary_tau(p, d, radius: float) -> float:
    """Non-negative root of ||p + tau d|| = radius for ||p|| <= radius."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    a = d @ d
    if a == 0.0:
        raise ValueError("direction is zero")
    b = 2.0 * (p @ d)
    c = p @ p - radius * radius
    disc = math.sqrt(max(b * b - 4.0 * a * c, 0.0))
    # pick the cancellation-free form of the positive root
    if b > 0.0:
        return max(-2.0 * c / (b + disc), 0.0)
    return max((-b + disc) / (2.0 * a), 0.0)


def cauchy_point(m: QuadraticModel) -> QpStep:
    """Minimizer of the model along -g inside the ball."""
    g = m.g
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        raise ConvergedError("converged: model gradient is zero")
    ghg = float(g @ m.h_vec(g))
    delta = m.radius
    if ghg <= 0.0:
        tau = 1.0
    else:
        tau = min(gnorm ** 3 / (delta * ghg), 1.0)
    t = tau * delta / gnorm
    p = -t * g
    decrease = t * gnorm * gnorm - 0.5 * t * t * ghg
    return QpStep(p, max(decrease, 0.0), tau == 1.0, 1)


def steihaug_toint(m: QuadraticModel, rtol: float = 1e-6, max_iter: int | None = None) -> QpStep:
    """Truncated CG from p = 0, leaving through the boundary on negative
    curvature or when an iterate would exit the ball.

    The model value is tracked as m(p) - m(0) = <p, g + r> / 2 with
    r = g + H p, so no extra ``h_vec`` is spent on the decrease.
    """
    g = m.g
    n = g.shape[0]
    if max_iter is None:
        max_iter = n
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        raise ConvergedError("converged: model gradient is zero")
    delta = m.radius

    p = np.zeros(n)
    r = g.copy()
    d = -r
    rr = gnorm * gnorm
    boundary = False
    it = 0
    while it < max_iter:
        it += 1
        hd = m.h_vec(d)
        curv = d @ hd
        if curv <= 0.0:
            tau = boundary_tau(p, d, delta)
            p, r = p + tau * d, r + tau * hd
            boundary = True
            break
        alpha = rr / curv
        p_next = p + alpha * d
        if np.linalg.norm(p_next) >= delta:
            tau = boundary_tau(p, d, delta)
            p, r = p + tau * d, r + tau * hd
            boundary = True
            break
        p = p_next
        r = r + alpha * hd
        rr_next = r @ r
        if math.sqrt(rr_next) <= rtol * gnorm:
            break
        d = -r + (rr_next / rr) * d
        rr = rr_next

    decrease = -0.5 * (p @ (g + r))
    return QpStep(p, max(decrease, 0.0), boundary, it)


def _ball_grid(dim: int, radius: float, grid: int) -> np.ndarray:
    radii = radius * np.linspace(0.0, 1.0, grid + 1)[1:]
    if dim == 1:
        pts = np.concatenate([radii, -radii])[:, None]
    elif dim == 2:
        th = np.linspace(0.0, 2 * np.pi, 4 * grid, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        pts = (radii[:, None, None] * dirs[None]).reshape(-1, 2)
    else:
        th = np.linspace(0.0, np.pi, 2 * grid + 1)
        ph = np.linspace(0.0, 2 * np.pi, 4 * grid, endpoint=False)
        t, f = np.meshgrid(th, ph, indexing="ij")
        dirs = np.stack([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)],
                        axis=-1).reshape(-1, 3)
        pts = (radii[:, None, None] * dirs[None]).reshape(-1, 3)
    return np.vstack([np.zeros((1, dim)), pts])


def brute_force_tr(m: QuadraticModel, grid: int = 20) -> QpStep:
    """Test oracle for dimension <= 3: best point of a polar grid over the
    ball, polished locally with SLSQP under the norm constraint.

    Needs a dense model (``QuadraticModel.from_matrix``).
    """
    g = m.g
    dim = g.shape[0]
    if dim > 3:
        raise ValueError("brute_force_tr supports dimension <= 3")
    h = getattr(m, "h", None)
    if h is None:
        h = np.column_stack([m.h_vec(e) for e in np.eye(dim)])
    delta = m.radius

    pts = _ball_grid(dim, delta, grid)
    vals = pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, h, pts)
    order = np.argsort(vals)

    def q(p):
        return g @ p + 0.5 * p @ h @ p

    best = pts[order[0]]
    best_val = vals[order[0]]
    cons = {"type": "ineq", "fun": lambda p: delta * delta - p @ p,
            "jac": lambda p: -2.0 * p}
    # polish a few distinct basins; boundary minimizers can be non-unique
    for idx in itertools.islice(order, 0, 5):
        res = minimize(q, pts[idx], jac=lambda p: g + h @ p, method="SLSQP",
                       constraints=[cons], options={"ftol": 1e-15, "maxiter": 200})
        p = res.x
        nrm = np.linalg.norm(p)
        if nrm > delta:
            p = p * (delta / nrm)
        val = q(p)
        if val < best_val:
            best, best_val = p, val
    nrm = float(np.linalg.norm(best))
    return QpStep(best, max(-best_val, 0.0), nrm >= delta * (1 - 1e-9), 0)
