"""Principal-component extraction via eigendecomposition of the covariance.

The component count is the smallest k whose cumulative explained-variance
ratio strictly exceeds the configured threshold (default 0.95).  Components
use a deterministic sign convention: the entry of largest magnitude in each
component vector is positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import InsufficientDataError, InvalidConfigError, InvalidDataError, ShapeMismatchError


@dataclass
class PcaModel:
    feature_names: list[str]
    mean: np.ndarray  # (n,)
    components: np.ndarray  # (k, n) rows are orthonormal component vectors
    eigenvalues: np.ndarray  # (k,) descending
    explained_variance_ratio: np.ndarray  # (k,)
    full_spectrum: np.ndarray  # (n,) all eigenvalues, descending
    variance_threshold: float

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "full_spectrum": self.full_spectrum.tolist(),
            "variance_threshold": self.variance_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            feature_names=list(d["feature_names"]),
            mean=np.array(d["mean"], dtype=np.float64),
            components=np.array(d["components"], dtype=np.float64),
            eigenvalues=np.array(d["eigenvalues"], dtype=np.float64),
            explained_variance_ratio=np.array(d["explained_variance_ratio"], dtype=np.float64),
            full_spectrum=np.array(d["full_spectrum"], dtype=np.float64),
            variance_threshold=float(d["variance_threshold"]),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def fit_pca(matrix: FeatureMatrix, variance_threshold: float = 0.95) -> PcaModel:
    if not 0.0 < variance_threshold <= 1.0:
        raise InvalidConfigError(
            f"variance_threshold must be in (0, 1], got {variance_threshold}"
        )
    if matrix.n_samples < 2:
        raise InsufficientDataError(f"PCA needs >= 2 samples, got {matrix.n_samples}")
    if not np.all(np.isfinite(matrix.values)):
        raise InvalidDataError("PCA input contains non-finite values")

    mean = matrix.values.mean(axis=0)
    centered = matrix.values - mean
    cov = centered.T @ centered / matrix.n_samples
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    eigvals = np.clip(eigvals, 0.0, None)  # covariance is PSD; clip fp negatives

    total = eigvals.sum()
    if total == 0.0:
        raise InvalidDataError("PCA input has zero total variance")
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    above = np.nonzero(cumulative > variance_threshold)[0]
    # threshold == 1.0 may be unreachable through strict comparison; keep all
    k = int(above[0]) + 1 if above.size else len(eigvals)

    components = eigvecs[:, :k].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(
        feature_names=list(matrix.feature_names),
        mean=mean,
        components=components,
        eigenvalues=eigvals[:k].copy(),
        explained_variance_ratio=ratios[:k].copy(),
        full_spectrum=eigvals,
        variance_threshold=float(variance_threshold),
    )


def project(model: PcaModel, matrix: FeatureMatrix) -> FeatureMatrix:
    """Scores of the samples on the retained components (columns pc1..pck)."""
    if matrix.feature_names != model.feature_names:
        raise ShapeMismatchError("feature names do not match the fitted components")
    scores = (matrix.values - model.mean) @ model.components.T
    names = [f"pc{i + 1}" for i in range(model.n_components)]
    return FeatureMatrix(names, scores)


def reconstruct(model: PcaModel, scores: FeatureMatrix) -> FeatureMatrix:
    """Back-projection from component scores to the original feature space."""
    if scores.n_features != model.n_components:
        raise ShapeMismatchError(
            f"{scores.n_features} score columns for {model.n_components} components"
        )
    values = scores.values @ model.components + model.mean
    return FeatureMatrix(list(model.feature_names), values)
