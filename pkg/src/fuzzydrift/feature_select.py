"""Entropy-based feature selection.

Each feature's empirical Shannon entropy (in nats) is estimated from an
equal-width histogram spanning [min, max] of the column.  Features whose
entropy does not exceed the threshold are removed; with the default threshold
of 0 that deletes exactly the constant columns, which carry no information
but would still influence distance-based clustering through their scaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import (
    EmptyResultError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidDataError,
)


def default_bins(n_samples: int) -> int:
    """Histogram bin count used when none is given: ceil(sqrt(N))."""
    if n_samples <= 0:
        raise InsufficientDataError("entropy needs at least one sample")
    return int(math.ceil(math.sqrt(n_samples)))


def feature_entropy(column: np.ndarray, bins: int) -> float:
    """Shannon entropy (nats) of one feature's equal-width histogram.

    A constant column has entropy exactly 0.0; the upper bound is ln(bins).
    """
    column = np.asarray(column, dtype=np.float64)
    if column.ndim != 1:
        raise InvalidConfigError(f"column must be 1-D, got ndim={column.ndim}")
    if column.size == 0:
        raise InsufficientDataError("entropy needs at least one sample")
    if bins < 1:
        raise InvalidConfigError(f"bins must be >= 1, got {bins}")
    if not np.all(np.isfinite(column)):
        raise InvalidDataError("entropy input contains non-finite values")
    lo = column.min()
    hi = column.max()
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(column, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / column.size
    return float(-(p * np.log(p)).sum())


@dataclass
class EntropyReport:
    """Per-feature entropies, presented sorted from most to least informative."""

    feature_names: list[str]  # sorted by descending entropy
    entropies: list[float]  # aligned with feature_names
    threshold: float
    bins: int
    selected: list[str]  # surviving features, in original column order

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "entropies": list(self.entropies),
            "threshold": self.threshold,
            "bins": self.bins,
            "selected": list(self.selected),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyReport":
        return cls(
            feature_names=list(d["feature_names"]),
            entropies=[float(x) for x in d["entropies"]],
            threshold=float(d["threshold"]),
            bins=int(d["bins"]),
            selected=list(d["selected"]),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("feature,entropy,selected\n")
            chosen = set(self.selected)
            for name, h in zip(self.feature_names, self.entropies):
                fh.write(f"{name},{repr(float(h))},{int(name in chosen)}\n")


def entropy_report(
    matrix: FeatureMatrix, threshold: float = 0.0, bins: int | None = None
) -> EntropyReport:
    if bins is None:
        bins = default_bins(matrix.n_samples)
    entropies = [feature_entropy(matrix.values[:, i], bins) for i in range(matrix.n_features)]
    selected = [
        name for name, h in zip(matrix.feature_names, entropies) if h > threshold
    ]
    order = sorted(
        range(matrix.n_features), key=lambda i: (-entropies[i], i)
    )  # descending entropy, stable
    return EntropyReport(
        feature_names=[matrix.feature_names[i] for i in order],
        entropies=[entropies[i] for i in order],
        threshold=float(threshold),
        bins=int(bins),
        selected=selected,
    )


def select_features(
    matrix: FeatureMatrix, threshold: float = 0.0, bins: int | None = None
) -> tuple[FeatureMatrix, EntropyReport]:
    """Keep features with entropy strictly above the threshold (original order)."""
    report = entropy_report(matrix, threshold=threshold, bins=bins)
    if not report.selected:
        raise EmptyResultError(f"no feature has entropy > {threshold}")
    return matrix.select(report.selected), report
