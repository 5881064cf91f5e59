"""Objectives with exact gradients and Hessian-vector products.

Every objective counts its value/gradient/hess_vec calls; the solvers and
the harness read those counters as the evaluation-cost ledger.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset


@dataclass(frozen=True)
class EvalCounts:
    n_f: int = 0
    n_grad: int = 0
    n_hessvec: int = 0


class Objective:
    """Base class: subclasses implement ``_value``, ``_gradient``, ``_hess_vec``."""

    dimension: int

    def __init__(self, dimension: int):
        self.dimension = int(dimension)
        self._lock = threading.Lock()
        self._n_f = self._n_grad = self._n_hessvec = 0

    @property
    def eval_counters(self) -> EvalCounts:
        with self._lock:
            return EvalCounts(self._n_f, self._n_grad, self._n_hessvec)

    def reset_counters(self) -> None:
        with self._lock:
            self._n_f = self._n_grad = self._n_hessvec = 0

    def _check(self, v, name="x"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dimension,):
            raise ValueError(
                f"{name} has shape {v.shape}, expected ({self.dimension},)")
        return v

    def value(self, x) -> float:
        x = self._check(x)
        with self._lock:
            self._n_f += 1
        return float(self._value(x))

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)
        with self._lock:
            self._n_grad += 1
        return self._gradient(x)

    def hess_vec(self, x, v) -> np.ndarray:
        x = self._check(x)
        v = self._check(v, "v")
        with self._lock:
            self._n_hessvec += 1
        return self._hess_vec(x, v)

    def step_value(self, x, p, f_x: float) -> tuple[float, float]:
        """Return ``(f(x + p), f(x) - f(x + p))`` for one evaluation.

        The reduction is computed from the change of each term where the
        subclass knows how, so it stays accurate long after the difference
        of two rounded values of ``f`` has become noise. ``f_x`` is the
        caller's value of ``f(x)``, used by the generic fallback.
        """
        x = self._check(x)
        p = self._check(p, "p")
        with self._lock:
            self._n_f += 1
        f_new = float(self._value(x + p))
        drop = self._drop(x, p)
        if drop is None:
            drop = f_x - f_new
        return f_new, float(drop)

    def __call__(self, x) -> float:
        return self.value(x)

    def _drop(self, x, p):
        return None

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def _hess_vec(self, x, v):
        raise NotImplementedError


def _default_lambda(dataset: Dataset, lam):
    if lam is not None:
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        return float(lam)
    if dataset.n_samples == 0:
        raise ValueError("lambda has no default for an empty dataset")
    return 1.0 / dataset.n_samples


class _MarginCache:
    """Remembers the last ``x`` so repeated hess_vec calls reuse ``Z @ x``.

    The entry is swapped as one tuple, so concurrent readers never see a
    weight vector paired with the wrong point.
    """

    def __init__(self):
        self._entry = None

    def get(self, x):
        entry = self._entry
        if entry is not None and np.array_equal(entry[0], x):
            return entry[1]
        return None

    def put(self, x, weights):
        self._entry = (x.copy(), weights)


def _penalty_drop(lam, x, p):
    return -lam * (x @ p + 0.5 * (p @ p))


class LogisticLoss(Objective):
    """sum_i log(1 + exp(-y_i <x, z_i>)) + lam/2 ||x||^2, labels in {-1, +1}."""

    def __init__(self, dataset: Dataset, lam: float | None = None):
        super().__init__(dataset.n_features)
        if dataset.n_samples and not np.all(np.abs(dataset.labels) == 1.0):
            raise ValueError("logistic loss needs labels in {-1, +1}")
        self.dataset = dataset
        self.lam = _default_lambda(dataset, lam)
        self._z = dataset.matrix
        self._zt = dataset.matrix.T.tocsr()
        self._y = dataset.labels
        self._cache = _MarginCache()

    def _value(self, x):
        m = self._y * (self._z @ x)
        return np.logaddexp(0.0, -m).sum() + 0.5 * self.lam * (x @ x)

    def _gradient(self, x):
        m = self._y * (self._z @ x)
        return self._zt @ (-self._y * expit(-m)) + self.lam * x

    def _hess_vec(self, x, v):
        w = self._cache.get(x)
        if w is None:
            s = expit(self._y * (self._z @ x))
            w = s * (1.0 - s)
            self._cache.put(x, w)
        return self._zt @ (w * (self._z @ v)) + self.lam * v

    def _drop(self, x, p):
        m = self._y * (self._z @ x)
        dm = self._y * (self._z @ p)
        small = np.abs(dm) <= 1.0
        # log(1+e^-m) - log(1+e^-(m+dm)) = -log1p(sigmoid(-m) * expm1(-dm))
        terms = np.where(
            small,
            -np.log1p(expit(-m) * np.expm1(-np.where(small, dm, 0.0))),
            np.logaddexp(0.0, -m) - np.logaddexp(0.0, -(m + dm)))
        return terms.sum() + _penalty_drop(self.lam, x, p)


class LeastSquaresLoss(Objective):
    """(1/N) sum_i (y_i - sigmoid(<x, z_i>))^2 + lam/2 ||x||^2, labels in {0, 1}.

    Non-convex: the Hessian can be indefinite.
    """

    def __init__(self, dataset: Dataset, lam: float | None = None):
        super().__init__(dataset.n_features)
        if dataset.n_samples and not np.all(np.isin(dataset.labels, (0.0, 1.0))):
            raise ValueError("least-squares loss needs labels in {0, 1}")
        self.dataset = dataset
        self.lam = _default_lambda(dataset, lam)
        self._z = dataset.matrix
        self._zt = dataset.matrix.T.tocsr()
        self._y = dataset.labels
        self._scale = 1.0 / max(dataset.n_samples, 1)
        self._cache = _MarginCache()

    def _value(self, x):
        r = expit(self._z @ x) - self._y
        return self._scale * (r @ r) + 0.5 * self.lam * (x @ x)

    def _gradient(self, x):
        s = expit(self._z @ x)
        ds = s * (1.0 - s)
        return 2.0 * self._scale * (self._zt @ ((s - self._y) * ds)) + self.lam * x

    def _hess_vec(self, x, v):
        w = self._cache.get(x)
        if w is None:
            s = expit(self._z @ x)
            ds = s * (1.0 - s)
            w = ds * ds + (s - self._y) * ds * (1.0 - 2.0 * s)
            self._cache.put(x, w)
        return 2.0 * self._scale * (self._zt @ (w * (self._z @ v))) + self.lam * v

    def _drop(self, x, p):
        u = self._z @ x
        du = self._z @ p
        s0 = expit(u)
        s1 = expit(u + du)
        small = np.abs(du) <= 1.0
        # sigmoid(u+du) - sigmoid(u) = sigmoid(u+du) (1 - sigmoid(u)) (-expm1(-du))
        ds = np.where(small, -s1 * (1.0 - s0) * np.expm1(-np.where(small, du, 0.0)),
                      s1 - s0)
        r0 = s0 - self._y
        # r0^2 - r1^2 = -(ds)(2 r0 + ds)
        return -self._scale * (ds @ (2.0 * r0 + ds)) + _penalty_drop(self.lam, x, p)


class RidgeLoss(Objective):
    """Linear least squares (1/(2N)) ||Z x - y||^2 + lam/2 ||x||^2.

    An exactly quadratic objective on a dataset; handy for checks where the
    quadratic model must coincide with the function.
    """

    def __init__(self, dataset: Dataset, lam: float | None = None):
        super().__init__(dataset.n_features)
        self.dataset = dataset
        self.lam = _default_lambda(dataset, lam)
        self._z = dataset.matrix
        self._zt = dataset.matrix.T.tocsr()
        self._y = dataset.labels
        self._scale = 1.0 / max(dataset.n_samples, 1)

    def _value(self, x):
        r = self._z @ x - self._y
        return 0.5 * self._scale * (r @ r) + 0.5 * self.lam * (x @ x)

    def _gradient(self, x):
        return self._scale * (self._zt @ (self._z @ x - self._y)) + self.lam * x

    def _hess_vec(self, x, v):
        return self._scale * (self._zt @ (self._z @ v)) + self.lam * v

    def _drop(self, x, p):
        r = self._z @ x - self._y
        zp = self._z @ p
        return -self._scale * (r @ zp + 0.5 * (zp @ zp)) + _penalty_drop(self.lam, x, p)


class Quadratic(Objective):
    """0.5 x'Ax - b'x + c for a dense symmetric ``A``."""

    def __init__(self, a, b=None, c: float = 0.0):
        a = np.asarray(a, dtype=float)
        super().__init__(a.shape[0])
        self.a = 0.5 * (a + a.T)
        self.b = np.zeros(self.dimension) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)

    def _value(self, x):
        return 0.5 * x @ (self.a @ x) - self.b @ x + self.c

    def _gradient(self, x):
        return self.a @ x - self.b

    def _hess_vec(self, x, v):
        return self.a @ v

    def _drop(self, x, p):
        return -((self.a @ x - self.b) @ p + 0.5 * p @ (self.a @ p))


class Rosenbrock(Objective):
    """sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2."""

    def __init__(self, dimension: int = 2):
        super().__init__(dimension)

    def _value(self, x):
        return np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2)

    def _gradient(self, x):
        g = np.zeros_like(x)
        t = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * t - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * t
        return g

    def _hess_vec(self, x, v):
        hv = np.zeros_like(x)
        diag = np.zeros_like(x)
        diag[:-1] = 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
        diag[1:] += 200.0
        off = -400.0 * x[:-1]
        hv += diag * v
        hv[:-1] += off * v[1:]
        hv[1:] += off * v[:-1]
        return hv
