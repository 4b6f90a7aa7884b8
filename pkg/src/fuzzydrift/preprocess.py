"""Column cleaning and standard scaling.

Cleaning drops columns that can never carry information: fully missing ones,
exact duplicates of an earlier column, and columns named on a caller-supplied
irrelevant list.  Constant columns are deliberately kept — removing those is
the job of entropy-based selection downstream.

The scaler centers each feature and divides by its population standard
deviation.  Zero-deviation features are flagged and transform to exactly 0
instead of dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import (
    EmptyResultError,
    InsufficientDataError,
    InvalidDataError,
    ShapeMismatchError,
)

DROP_ALL_MISSING = "all_missing"
DROP_DUPLICATE = "duplicate"
DROP_IRRELEVANT = "listed_irrelevant"


@dataclass
class CleanReport:
    dropped: list[tuple[str, str]]  # (feature name, reason)

    @property
    def dropped_names(self) -> list[str]:
        return [name for name, _ in self.dropped]


def clean(matrix: FeatureMatrix, irrelevant=()) -> tuple[FeatureMatrix, CleanReport]:
    """Drop unusable columns; idempotent, original column order preserved."""
    irrelevant = set(irrelevant)
    dropped: list[tuple[str, str]] = []
    kept: list[int] = []
    kept_cols: list[np.ndarray] = []
    for idx, name in enumerate(matrix.feature_names):
        col = matrix.values[:, idx]
        if name in irrelevant:
            dropped.append((name, DROP_IRRELEVANT))
            continue
        if col.size > 0 and np.all(np.isnan(col)):
            dropped.append((name, DROP_ALL_MISSING))
            continue
        duplicate_of = None
        for j, prev in zip(kept, kept_cols):
            if np.array_equal(col, prev, equal_nan=True):
                duplicate_of = matrix.feature_names[j]
                break
        if duplicate_of is not None:
            dropped.append((name, f"{DROP_DUPLICATE}:{duplicate_of}"))
            continue
        kept.append(idx)
        kept_cols.append(col)
    if not kept:
        raise EmptyResultError("cleaning dropped every column")
    out = FeatureMatrix([matrix.feature_names[i] for i in kept], matrix.values[:, kept].copy())
    return out, CleanReport(dropped)


@dataclass
class ScalerModel:
    feature_names: list[str]
    mean: np.ndarray
    std: np.ndarray  # population standard deviation
    zero_deviation: np.ndarray  # True where std == 0

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "zero_deviation": [bool(b) for b in self.zero_deviation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerModel":
        return cls(
            feature_names=list(d["feature_names"]),
            mean=np.array(d["mean"], dtype=np.float64),
            std=np.array(d["std"], dtype=np.float64),
            zero_deviation=np.array(d["zero_deviation"], dtype=bool),
        )


def fit_scaler(matrix: FeatureMatrix) -> ScalerModel:
    if matrix.n_samples < 2:
        raise InsufficientDataError(f"scaler needs >= 2 samples, got {matrix.n_samples}")
    if not np.all(np.isfinite(matrix.values)):
        raise InvalidDataError("scaler input contains non-finite values")
    mean = matrix.values.mean(axis=0)
    std = matrix.values.std(axis=0)  # population (ddof=0)
    return ScalerModel(
        feature_names=list(matrix.feature_names),
        mean=mean,
        std=std,
        zero_deviation=std == 0.0,
    )


def transform(scaler: ScalerModel, matrix: FeatureMatrix) -> FeatureMatrix:
    """Standardize columns; zero-deviation features map to exactly 0."""
    if matrix.feature_names != scaler.feature_names:
        raise ShapeMismatchError("feature names do not match the fitted scaler")
    if not np.all(np.isfinite(matrix.values)):
        raise InvalidDataError("scaler input contains non-finite values")
    safe_std = np.where(scaler.zero_deviation, 1.0, scaler.std)
    out = (matrix.values - scaler.mean) / safe_std
    out[:, scaler.zero_deviation] = 0.0
    return FeatureMatrix(list(matrix.feature_names), out)
