"""Core data representation, LIBSVM-format I/O, and class statistics.

Datasets are immutable after construction: feature matrices are stored dense
with the write flag cleared, so instances can be shared freely across threads.
The external text format is the LIBSVM sparse convention (1-based, strictly
increasing indices, zero entries omitted on write).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence, Union

import numpy as np

__all__ = [
    "DatasetError",
    "LibsvmFormatError",
    "FeatureVector",
    "LabeledDataset",
    "ClassStats",
    "parse_libsvm",
    "write_libsvm",
    "load_libsvm",
    "save_libsvm",
    "class_stats",
    "estimate_radius",
]


class DatasetError(ValueError):
    """A dataset violates a structural requirement (empty, single-class, ...)."""


class LibsvmFormatError(ValueError):
    """Malformed LIBSVM text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _format_value(v: float) -> str:
    # repr() of a float is the shortest decimal string that round-trips;
    # integral values drop the trailing ".0" per LIBSVM habit.
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


@dataclass(frozen=True)
class FeatureVector:
    """Sparse feature vector with 1-based, strictly increasing indices."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DatasetError("indices and values differ in length")
        if self.dimension < 1:
            raise DatasetError("dimension must be a positive integer")
        prev = 0
        for idx, val in zip(self.indices, self.values):
            if idx <= prev:
                raise DatasetError(f"indices must be strictly increasing and 1-based, got {idx} after {prev}")
            if idx > self.dimension:
                raise DatasetError(f"index {idx} exceeds dimension {self.dimension}")
            if not math.isfinite(val):
                raise DatasetError(f"non-finite value at index {idx}")
            prev = idx

    @classmethod
    def from_dense(cls, row: np.ndarray) -> "FeatureVector":
        row = np.asarray(row, dtype=float)
        nz = np.nonzero(row)[0]
        return cls(tuple(int(i) + 1 for i in nz), tuple(float(row[i]) for i in nz), dimension=row.shape[0])

    def to_dense(self, dimension: int | None = None) -> np.ndarray:
        dim = self.dimension if dimension is None else dimension
        if dim < self.dimension:
            raise DatasetError("target dimension smaller than vector dimension")
        out = np.zeros(dim, dtype=float)
        for idx, val in zip(self.indices, self.values):
            out[idx - 1] = val
        return out


class LabeledDataset:
    """Feature vectors paired with labels in {-1, +1}.

    The constructor requires at least one point; training-oriented operations
    additionally require both classes present (see :func:`class_stats`).
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray):
        X = np.ascontiguousarray(np.asarray(features, dtype=float))
        y = np.asarray(labels, dtype=np.int64).copy()
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D array")
        if X.shape[0] == 0:
            raise DatasetError("empty dataset")
        if X.shape[1] < 1:
            raise DatasetError("dimension must be positive")
        if y.shape != (X.shape[0],):
            raise DatasetError("labels must be one per point")
        if not np.all(np.isin(y, (-1, 1))):
            raise DatasetError("labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        self._X = X
        self._y = y

    @property
    def features(self) -> np.ndarray:
        return self._X

    @property
    def labels(self) -> np.ndarray:
        return self._y

    @property
    def n_points(self) -> int:
        return self._X.shape[0]

    @property
    def dimension(self) -> int:
        return self._X.shape[1]

    def __len__(self) -> int:
        return self.n_points

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self._X.shape == other._X.shape
            and np.array_equal(self._X, other._X)
            and np.array_equal(self._y, other._y)
        )

    def __repr__(self) -> str:
        return f"LabeledDataset(n_points={self.n_points}, dimension={self.dimension})"

    def feature_vector(self, i: int) -> FeatureVector:
        return FeatureVector.from_dense(self._X[i])

    def with_labels(self, labels: np.ndarray) -> "LabeledDataset":
        """Same feature vectors, new labels."""
        return LabeledDataset(self._X, labels)

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self._X[idx], self._y[idx])

    def require_two_classes(self) -> None:
        if np.all(self._y == self._y[0]):
            raise DatasetError("dataset contains a single class")
        if self.n_points < 2:
            raise DatasetError("training dataset needs at least 2 points")


@dataclass(frozen=True)
class ClassStats:
    """Minority-class bookkeeping; ties broken toward label +1."""

    minority_label: int
    minority_count: int
    beta: float
    minority_indices: np.ndarray = field(repr=False)
    majority_indices: np.ndarray = field(repr=False)

    @property
    def majority_label(self) -> int:
        return -self.minority_label

    @property
    def majority_count(self) -> int:
        return len(self.majority_indices)


def class_stats(d: LabeledDataset) -> ClassStats:
    """Minority label, count, and fraction beta = minority_count / n.

    On an exact 50/50 split the minority label is fixed as +1 so the choice
    is deterministic.
    """
    d.require_two_classes()
    y = d.labels
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == -1)
    if len(pos) <= len(neg):
        minority_label, mino, majo = 1, pos, neg
    else:
        minority_label, mino, majo = -1, neg, pos
    return ClassStats(
        minority_label=minority_label,
        minority_count=len(mino),
        beta=len(mino) / d.n_points,
        minority_indices=mino,
        majority_indices=majo,
    )


_ACCEPTED_LABELS = {-1.0: -1, 0.0: -1, 1.0: 1}


def parse_libsvm(source: Union[str, bytes, IO]) -> LabeledDataset:
    """Parse LIBSVM sparse text into a dataset.

    Labels +1/-1 are preserved and {0,1} are mapped to {-1,+1}.  The feature
    dimension is the maximum index seen anywhere in the stream.  Blank lines
    are skipped; ``\\r\\n`` endings are tolerated.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source

    labels: list[int] = []
    rows: list[list[tuple[int, float]]] = []
    max_index = 0
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            raw_label = float(parts[0])
        except ValueError:
            raise LibsvmFormatError(line_no, f"unparseable label {parts[0]!r}") from None
        if raw_label not in _ACCEPTED_LABELS:
            raise LibsvmFormatError(line_no, f"unknown label value {parts[0]!r} (expected -1, 0, +1)")
        entries: list[tuple[int, float]] = []
        prev = 0
        for tok in parts[1:]:
            idx_s, _, val_s = tok.partition(":")
            if not val_s:
                raise LibsvmFormatError(line_no, f"malformed entry {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmFormatError(line_no, f"malformed entry {tok!r}") from None
            if idx <= prev:
                raise LibsvmFormatError(line_no, f"non-increasing index {idx} after {prev}")
            if idx < 1:
                raise LibsvmFormatError(line_no, f"index {idx} is not 1-based")
            if not math.isfinite(val):
                raise LibsvmFormatError(line_no, f"non-finite value in entry {tok!r}")
            entries.append((idx, val))
            prev = idx
        max_index = max(max_index, prev)
        labels.append(_ACCEPTED_LABELS[raw_label])
        rows.append(entries)

    if not rows:
        raise DatasetError("empty dataset")
    if max_index == 0:
        raise DatasetError("no feature entries in stream; dimension undefined")

    X = np.zeros((len(rows), max_index), dtype=float)
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    return LabeledDataset(X, np.array(labels))


def write_libsvm(d: LabeledDataset) -> bytes:
    """Serialize to LIBSVM text (UTF-8 bytes, ``\\n`` endings).

    Labels are emitted as ``+1``/``-1``; zero-valued entries are omitted and
    values use the shortest decimal form that round-trips exactly.
    """
    lines = []
    for i in range(d.n_points):
        label = "+1" if d.labels[i] == 1 else "-1"
        row = d.features[i]
        nz = np.nonzero(row)[0]
        parts = [label]
        parts.extend(f"{j + 1}:{_format_value(row[j])}" for j in nz)
        lines.append(" ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_libsvm(path) -> LabeledDataset:
    with open(path, "rb") as fh:
        return parse_libsvm(fh)


def save_libsvm(d: LabeledDataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_libsvm(d))


def estimate_radius(d: LabeledDataset, kernel=None) -> float:
    """Radius of the ball (in feature space) enclosing the data around the origin.

    For the linear kernel this is the largest Euclidean norm; in general it is
    ``max_i sqrt(K(x_i, x_i))``.
    """
    if kernel is None or getattr(kernel, "kind", "linear") == "linear":
        return float(np.sqrt(np.max(np.einsum("ij,ij->i", d.features, d.features))))
    diag = kernel.diagonal(d.features)
    return float(np.sqrt(np.max(diag)))
