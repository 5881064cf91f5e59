"""LIBSVM classification datasets and a seeded synthetic generator."""

from __future__ import annotations

import enum
import io
import os
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np
import scipy.sparse as sp


class LibsvmParseError(ValueError):
    """Raised for malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class LabelConvention(enum.Enum):
    PLUS_MINUS_ONE = "pm1"
    ZERO_ONE = "01"

    @property
    def targets(self) -> tuple[float, float]:
        if self is LabelConvention.PLUS_MINUS_ONE:
            return (-1.0, 1.0)
        return (0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sparse samples ``Z`` (N x n, CSR) with one real label per row.

    Rows keep 0-based, strictly increasing column indices. The arrays are
    made read-only on construction so a dataset can be shared freely.
    """

    matrix: sp.csr_matrix
    labels: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if not sp.isspmatrix_csr(m):
            raise TypeError("matrix must be a scipy CSR matrix")
        if self.labels.shape != (m.shape[0],):
            raise ValueError(
                f"{self.labels.shape[0]} labels for {m.shape[0]} samples")
        for i in range(m.shape[0]):
            idx = m.indices[m.indptr[i]:m.indptr[i + 1]]
            if idx.size > 1 and np.any(np.diff(idx) <= 0):
                raise ValueError(f"row {i}: indices not strictly increasing")
        for a in (m.data, m.indices, m.indptr, self.labels):
            a.flags.writeable = False

    @classmethod
    def from_rows(cls, rows, labels, n_features=None) -> "Dataset":
        """Build from a list of ``{index: value}`` dicts (0-based)."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for row in rows:
            for j in sorted(row):
                indices.append(int(j))
                data.append(float(row[j]))
            indptr.append(len(indices))
        if n_features is None:
            n_features = max(indices) + 1 if indices else 0
        m = sp.csr_matrix(
            (np.asarray(data, dtype=float),
             np.asarray(indices, dtype=np.int64),
             np.asarray(indptr, dtype=np.int64)),
            shape=(len(indptr) - 1, n_features))
        return cls(m, np.asarray(labels, dtype=float))

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def rows(self) -> Iterator[dict[int, float]]:
        m = self.matrix
        for i in range(m.shape[0]):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            yield dict(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))

    def same_as(self, other: "Dataset") -> bool:
        a, b = self.matrix, other.matrix
        return (a.shape == b.shape
                and np.array_equal(a.indptr, b.indptr)
                and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data)
                and np.array_equal(self.labels, other.labels))


def _number(tok: str, lineno: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise LibsvmParseError(lineno, f"non-numeric {what} {tok!r}") from None
    if not np.isfinite(v):
        raise LibsvmParseError(lineno, f"non-finite {what} {tok!r}")
    return v


def parse_libsvm(text: str | TextIO, n_features: int | None = None) -> Dataset:
    """Parse LIBSVM records ``label idx:val idx:val ...`` (1-based indices).

    ``n_features`` overrides the feature count, which otherwise is the
    largest index seen. Blank lines and ``#`` comments are skipped.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    labels: list[float] = []
    indices: list[int] = []
    data: list[float] = []
    indptr = [0]
    max_index = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_number(tokens[0], lineno, "label"))
        prev = 0
        for tok in tokens[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"malformed token {tok!r}")
            try:
                j = int(key)
            except ValueError:
                raise LibsvmParseError(lineno, f"malformed index {key!r}") from None
            if j < 1:
                raise LibsvmParseError(lineno, f"index {j} is not 1-based")
            if j <= prev:
                raise LibsvmParseError(
                    lineno, f"index {j} does not increase (previous {prev})")
            prev = j
            indices.append(j - 1)
            data.append(_number(val, lineno, "value"))
        max_index = max(max_index, prev)
        indptr.append(len(indices))

    if n_features is None:
        n_features = max_index
    elif n_features < max_index:
        raise ValueError(
            f"n_features={n_features} but index {max_index} present")
    m = sp.csr_matrix(
        (np.asarray(data, dtype=float),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), n_features))
    return Dataset(m, np.asarray(labels, dtype=float))


def load_libsvm(path: str | os.PathLike, n_features: int | None = None) -> Dataset:
    with open(path) as fh:
        return parse_libsvm(fh, n_features=n_features)


def to_libsvm(d: Dataset) -> str:
    """Serialize with ``repr`` floats so that parsing round-trips exactly."""
    lines = []
    for y, row in zip(d.labels, d.rows()):
        parts = [_fmt(y)] + [f"{j + 1}:{_fmt(v)}" for j, v in row.items()]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def save_libsvm(d: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(to_libsvm(d))


def map_labels(d: Dataset, convention: LabelConvention) -> Dataset:
    """Map the two raw label values order-preservingly onto ``convention``."""
    raw = np.unique(d.labels)
    if raw.size != 2:
        raise ValueError(
            f"expected exactly two distinct labels, found {raw.size}: {raw.tolist()[:5]}")
    lo, hi = convention.targets
    labels = np.where(d.labels == raw[0], lo, hi)
    return Dataset(d.matrix, labels)


@dataclass(frozen=True)
class DatasetStats:
    n_samples: int
    n_features: int
    nnz: int
    label_counts: dict[float, int]


def dataset_stats(d: Dataset) -> DatasetStats:
    counts = Counter(d.labels.tolist())
    return DatasetStats(d.n_samples, d.n_features, d.nnz,
                        dict(sorted(counts.items())))


def synthetic_classification(n_samples: int = 500, n_features: int = 50, *,
                             seed: int = 0, noise: float = 0.1,
                             scale_decay: float = 1.0,
                             density: float = 1.0) -> Dataset:
    """Gaussian features with a planted separator and flipped labels.

    Feature ``j`` is scaled by ``scale_decay ** (j / (n_features - 1))`` so
    ``scale_decay < 1`` makes the Hessian ill-conditioned. ``density < 1``
    zeroes entries at random. A fraction ``noise`` of labels (in +-1) is
    flipped, which keeps the logistic minimizer finite.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, n_features))
    if n_features > 1:
        z *= scale_decay ** (np.arange(n_features) / (n_features - 1))
    if density < 1.0:
        z *= rng.random((n_samples, n_features)) < density
    w = rng.standard_normal(n_features)
    y = np.where(z @ w >= 0.0, 1.0, -1.0)
    flip = rng.random(n_samples) < noise
    y[flip] = -y[flip]
    return Dataset(sp.csr_matrix(z), y)
