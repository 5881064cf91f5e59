"""Random sketch operators S (ell x n) and the sketched model ingredients.

Two storage layouts: ``DenseSketch`` (row-major ``ell x n`` array, used by
the Gaussian sketch) and ``SparseSketch`` (column-major, ``s`` entries per
column, used by s-hashing and coordinate selection). ``apply`` computes
``S @ v`` and ``apply_transpose`` the prolongation ``S.T @ u``.
"""

from __future__ import annotations

import enum
import math

import numpy as np


class SketchKind(enum.Enum):
    GAUSSIAN = "gaussian"
    SHASH = "shash"
    COORDINATE = "coordinate"


class SketchOperator:
    kind: SketchKind
    ell: int
    n: int

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"apply expects shape ({self.n},), got {v.shape}")
        return self._apply(v)

    def apply_transpose(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.ell,):
            raise ValueError(
                f"apply_transpose expects shape ({self.ell},), got {u.shape}")
        return self._apply_transpose(u)

    def toarray(self) -> np.ndarray:
        raise NotImplementedError

    def tobytes(self) -> bytes:
        return self.toarray().tobytes()


class DenseSketch(SketchOperator):
    def __init__(self, matrix, kind: SketchKind = SketchKind.GAUSSIAN):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("sketch matrix must be 2-D")
        matrix.flags.writeable = False
        self.matrix = matrix
        self.ell, self.n = matrix.shape
        self.kind = kind

    def _apply(self, v):
        return self.matrix @ v

    def _apply_transpose(self, u):
        return self.matrix.T @ u

    def toarray(self):
        return self.matrix.copy()


class SparseSketch(SketchOperator):
    """Column ``j`` holds ``values[:, j]`` in rows ``rows[:, j]``.

    Zero entries in ``values`` are allowed (coordinate sketches leave
    unselected columns empty).
    """

    def __init__(self, rows, values, ell: int, kind: SketchKind = SketchKind.SHASH):
        rows = np.array(rows, dtype=np.int64)
        values = np.array(values, dtype=float)
        if rows.shape != values.shape or rows.ndim != 2:
            raise ValueError("rows and values must be matching (s, n) arrays")
        if rows.size and (rows.min() < 0 or rows.max() >= ell):
            raise ValueError("row index out of range")
        rows.flags.writeable = False
        values.flags.writeable = False
        self.rows, self.values = rows, values
        self.ell, self.n = int(ell), rows.shape[1]
        self.s = rows.shape[0]
        self.kind = kind

    def _apply(self, v):
        return np.bincount(self.rows.ravel(), weights=(self.values * v).ravel(),
                           minlength=self.ell).astype(float)

    def _apply_transpose(self, u):
        return (self.values * u[self.rows]).sum(axis=0)

    def toarray(self):
        out = np.zeros((self.ell, self.n))
        cols = np.broadcast_to(np.arange(self.n), self.rows.shape)
        np.add.at(out, (self.rows, cols), self.values)
        return out


def _check_sizes(ell, n):
    if not 1 <= ell <= n:
        raise ValueError(f"need 1 <= ell <= n, got ell={ell}, n={n}")


def gaussian_sketch(ell: int, n: int, rng: np.random.Generator) -> DenseSketch:
    """Entries i.i.d. N(0, 1/ell)."""
    _check_sizes(ell, n)
    return DenseSketch(rng.standard_normal((ell, n)) / math.sqrt(ell))


def shash_sketch(ell: int, n: int, s: int, rng: np.random.Generator) -> SparseSketch:
    """Each column: ``s`` distinct rows drawn uniformly, entries +-1/sqrt(s)."""
    _check_sizes(ell, n)
    if not 1 <= s <= ell:
        raise ValueError(f"need 1 <= s <= ell, got s={s}, ell={ell}")
    # first s positions of an independent random permutation of each column
    rows = np.argsort(rng.random((ell, n)), axis=0)[:s]
    signs = rng.integers(0, 2, size=(s, n)) * 2.0 - 1.0
    return SparseSketch(rows, signs / math.sqrt(s), ell, SketchKind.SHASH)


def coordinate_sketch(ell: int, n: int, rng: np.random.Generator | None = None,
                      coords=None) -> SparseSketch:
    """Rows are unit vectors e_c for ``ell`` distinct coordinates ``c``.

    With ``coords=None`` the coordinates are drawn uniformly; otherwise they
    are taken in the given order. S S^T = I holds exactly.
    """
    _check_sizes(ell, n)
    if coords is None:
        if rng is None:
            raise ValueError("coordinate_sketch needs rng or coords")
        coords = rng.permutation(n)[:ell]
    coords = np.asarray(coords, dtype=np.int64)
    if coords.shape != (ell,) or np.unique(coords).size != ell:
        raise ValueError("coords must be ell distinct indices")
    rows = np.zeros((1, n), dtype=np.int64)
    values = np.zeros((1, n))
    rows[0, coords] = np.arange(ell)
    values[0, coords] = 1.0
    return SparseSketch(rows, values, ell, SketchKind.COORDINATE)


def default_s(ell: int) -> int:
    """About 10% of the subspace size, at least one."""
    return max(1, math.ceil(0.1 * ell))


def draw_sketch(kind: SketchKind | str, ell: int, n: int, rng: np.random.Generator,
                s: int | None = None) -> SketchOperator:
    kind = SketchKind(kind)
    if kind is SketchKind.GAUSSIAN:
        return gaussian_sketch(ell, n, rng)
    if kind is SketchKind.SHASH:
        return shash_sketch(ell, n, default_s(ell) if s is None else s, rng)
    return coordinate_sketch(ell, n, rng)


def sketch_rng(seed: int, k: int) -> np.random.Generator:
    """Generator for the k-th sketch of a run, independent of call order."""
    return np.random.default_rng([int(seed), 1, int(k)])


def apply(S: SketchOperator, v) -> np.ndarray:
    return S.apply(v)


def apply_transpose(S: SketchOperator, u) -> np.ndarray:
    return S.apply_transpose(u)


def sketch_gradient(S: SketchOperator, g) -> np.ndarray:
    return S.apply(g)


def sketch_hessian(S: SketchOperator, objective, x, symmetrize: bool = True) -> np.ndarray:
    """Dense ``S H(x) S^T`` from exactly ``ell`` Hessian-vector products."""
    x = np.asarray(x, dtype=float)
    if x.shape != (S.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({S.n},)")
    m = np.empty((S.ell, S.ell))
    e = np.zeros(S.ell)
    for j in range(S.ell):
        e[j] = 1.0
        m[:, j] = S.apply(objective.hess_vec(x, S.apply_transpose(e)))
        e[j] = 0.0
    if symmetrize:
        m = 0.5 * (m + m.T)
    return m
