"""Named feature matrix container and CSV round-trip helpers.

A :class:`FeatureMatrix` is the unit of exchange between every stage of the
framework: rows are telemetry samples (one inspection each), columns are named
features.  CSV files carry a header row with the feature names and one sample
per line; floats are written with ``repr`` precision so that a write/read
round-trip is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, MissingFeatureError, ShapeMismatchError


@dataclass(eq=False)
class FeatureMatrix:
    feature_names: list[str]
    values: np.ndarray  # (n_samples, n_features) float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ShapeMismatchError(f"values must be 2-D, got ndim={self.values.ndim}")
        if len(self.feature_names) != self.values.shape[1]:
            raise ShapeMismatchError(
                f"{len(self.feature_names)} names for {self.values.shape[1]} columns"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise InvalidConfigError("duplicate feature names")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.feature_names.index(name)
        except ValueError:
            raise MissingFeatureError(f"no feature named {name!r}") from None
        return self.values[:, idx]

    def select(self, names: list[str]) -> "FeatureMatrix":
        """Sub-matrix with the given columns, in the given order."""
        idx = []
        for name in names:
            if name not in self.feature_names:
                raise MissingFeatureError(f"no feature named {name!r}")
            idx.append(self.feature_names.index(name))
        return FeatureMatrix(list(names), self.values[:, idx].copy())

    def take_rows(self, indices) -> "FeatureMatrix":
        return FeatureMatrix(list(self.feature_names), self.values[np.asarray(indices)].copy())

    def copy(self) -> "FeatureMatrix":
        return FeatureMatrix(list(self.feature_names), self.values.copy())

    def equals(self, other: "FeatureMatrix") -> bool:
        return (
            self.feature_names == other.feature_names
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def write_csv(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(matrix.feature_names) + "\n")
        for row in matrix.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv(path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header:
            raise InvalidConfigError(f"{path}: empty CSV")
        names = header.split(",")
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise ShapeMismatchError(f"{path}: row width {len(parts)} != header {len(names)}")
            rows.append([float(p) for p in parts])
    values = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return FeatureMatrix(names, values)


def write_labels_csv(labels, path, column: str = "is_drifted") -> None:
    labels = np.asarray(labels)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(column + "\n")
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_labels_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()  # header
        return np.array([int(line.strip()) for line in fh if line.strip()], dtype=bool)
