"""End-to-end drift-detection pipeline and its ablation grid.

A fitted pipeline chains column cleaning, standard scaling, optional
entropy-based feature selection, optional principal-component projection,
and one fuzzy clustering procedure.  The four configurations RAW / EA /
PCA / EA_PCA toggle the two optional stages; EA_PCA projects the selected
features.  Every stage is fitted on the training split only, and the whole
model serializes to a single JSON document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import clustering, feature_extract, feature_select, preprocess
from .clustering import ClusterModel
from .dataset import FeatureMatrix
from .errors import InvalidConfigError, ShapeMismatchError
from .evaluation import (
    EvaluationResult,
    best_label_mapping,
    evaluate_memberships,
    hard_assignments,
    stratified_split,
)
from .feature_extract import PcaModel
from .feature_select import EntropyReport
from .preprocess import ScalerModel

CONFIGS = ("RAW", "EA", "PCA", "EA_PCA")
ALGORITHMS = ("fcm", "probcp", "posscp")


def _wants_selection(config: str) -> bool:
    return config in ("EA", "EA_PCA")


def _wants_projection(config: str) -> bool:
    return config in ("PCA", "EA_PCA")


@dataclass
class PipelineModel:
    """All fitted stages of one configuration, ready to score new telemetry."""

    config: str
    scaler: ScalerModel
    cluster: ClusterModel
    anomaly_cluster_index: int
    split_seed: int
    entropy: EntropyReport | None = None
    pca: PcaModel | None = None

    def __post_init__(self):
        if self.config not in CONFIGS:
            raise InvalidConfigError("config must be one of %s, got %r" % (CONFIGS, self.config))
        if _wants_selection(self.config) != (self.entropy is not None):
            raise InvalidConfigError(
                "config %s %s an entropy stage"
                % (self.config, "requires" if _wants_selection(self.config) else "forbids")
            )
        if _wants_projection(self.config) != (self.pca is not None):
            raise InvalidConfigError(
                "config %s %s a projection stage"
                % (self.config, "requires" if _wants_projection(self.config) else "forbids")
            )

    def transform(self, matrix: FeatureMatrix) -> FeatureMatrix:
        """Run the fitted feature stages; output feeds the clustering stage."""
        stage = preprocess.transform(self.scaler, matrix.select(self.scaler.feature_names))
        if self.entropy is not None:
            stage = stage.select(self.entropy.selected)
        if self.pca is not None:
            stage = feature_extract.project(self.pca, stage)
        return stage

    def memberships(self, matrix: FeatureMatrix) -> np.ndarray:
        return clustering.predict(self.cluster, self.transform(matrix))

    def classify(self, matrix: FeatureMatrix) -> np.ndarray:
        """Hard per-sample verdicts: True where the anomalous cluster wins."""
        return hard_assignments(self.memberships(matrix)) == self.anomaly_cluster_index

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "scaler": self.scaler.to_dict(),
            "entropy": None if self.entropy is None else self.entropy.to_dict(),
            "pca": None if self.pca is None else self.pca.to_dict(),
            "cluster": self.cluster.to_dict(),
            "anomaly_cluster_index": self.anomaly_cluster_index,
            "split_seed": self.split_seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineModel":
        return cls(
            config=payload["config"],
            scaler=ScalerModel.from_dict(payload["scaler"]),
            entropy=None if payload.get("entropy") is None else EntropyReport.from_dict(payload["entropy"]),
            pca=None if payload.get("pca") is None else PcaModel.from_dict(payload["pca"]),
            cluster=ClusterModel.from_dict(payload["cluster"]),
            anomaly_cluster_index=int(payload["anomaly_cluster_index"]),
            split_seed=int(payload["split_seed"]),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "PipelineModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class _FittedStages:
    """Feature stages shared by every algorithm within one seeded run."""

    scaler: ScalerModel
    entropy: EntropyReport | None
    pca: PcaModel | None
    features: FeatureMatrix  # all rows, final feature space


def _fit_stages(
    cleaned: FeatureMatrix,
    train_rows: np.ndarray,
    config: str,
    entropy_threshold: float,
    variance_threshold: float,
    entropy_bins: int | None,
) -> _FittedStages:
    scaler = preprocess.fit_scaler(cleaned.take_rows(train_rows))
    stage = preprocess.transform(scaler, cleaned)
    entropy = None
    if _wants_selection(config):
        _, entropy = feature_select.select_features(
            stage.take_rows(train_rows), threshold=entropy_threshold, bins=entropy_bins
        )
        stage = stage.select(entropy.selected)
    pca = None
    if _wants_projection(config):
        pca = feature_extract.fit_pca(stage.take_rows(train_rows), variance_threshold)
        stage = feature_extract.project(pca, stage)
    return _FittedStages(scaler=scaler, entropy=entropy, pca=pca, features=stage)


def fit_pipeline(
    matrix: FeatureMatrix,
    labels,
    config: str = "EA_PCA",
    algorithm: str = "posscp",
    seed=0,
    split_seed=None,
    test_fraction: float = 0.3,
    n_clusters: int = 2,
    entropy_threshold: float = 0.0,
    variance_threshold: float = 0.95,
    entropy_bins: int | None = None,
    **fit_options,
) -> PipelineModel:
    """Fit every stage on the training split and name the anomalous cluster.

    The split is stratified on ``labels``; the cluster whose training-side
    naming corresponds to the drifted label becomes ``anomaly_cluster_index``.
    """
    if config not in CONFIGS:
        raise InvalidConfigError("config must be one of %s, got %r" % (CONFIGS, config))
    labels = np.asarray(labels, dtype=bool)
    if labels.shape[0] != matrix.n_samples:
        raise ShapeMismatchError(
            "%d labels for %d samples" % (labels.shape[0], matrix.n_samples)
        )
    if split_seed is None:
        split_seed = seed
    cleaned, _ = preprocess.clean(matrix)
    split = stratified_split(labels, test_fraction=test_fraction, seed=split_seed)
    stages = _fit_stages(
        cleaned, split.train, config, entropy_threshold, variance_threshold, entropy_bins
    )
    model, weights, _ = clustering.fit(
        algorithm,
        stages.features.take_rows(split.train),
        n_clusters=n_clusters,
        seed=seed,
        **fit_options,
    )
    naming = best_label_mapping(hard_assignments(weights), labels[split.train])
    return PipelineModel(
        config=config,
        scaler=stages.scaler,
        entropy=stages.entropy,
        pca=stages.pca,
        cluster=model,
        anomaly_cluster_index=int(np.argmax(naming)),
        split_seed=int(split_seed),
    )


def evaluate_pipeline(
    model: PipelineModel, matrix: FeatureMatrix, labels, test_fraction: float = 0.3
) -> EvaluationResult:
    """Score a fitted pipeline on the split its ``split_seed`` defines."""
    labels = np.asarray(labels, dtype=bool)
    split = stratified_split(labels, test_fraction=test_fraction, seed=model.split_seed)
    weights = model.memberships(matrix)
    return evaluate_memberships(
        weights[split.train], weights[split.test], labels[split.train], labels[split.test]
    )


@dataclass
class AblationCell:
    """Aggregated scores of one (configuration, algorithm) grid cell."""

    config: str
    algorithm: str
    runs: int
    mse_train: float
    mse_test: float
    std: float  # std of the per-run test MSE
    train_std: float
    mean_iterations: float
    converged_fraction: float
    train_exceeds_test: bool

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "algorithm": self.algorithm,
            "runs": self.runs,
            "mse_train": self.mse_train,
            "mse_test": self.mse_test,
            "std": self.std,
            "train_std": self.train_std,
            "mean_iterations": self.mean_iterations,
            "converged_fraction": self.converged_fraction,
            "train_exceeds_test": self.train_exceeds_test,
        }


def run_ablation(
    matrix: FeatureMatrix,
    labels,
    algorithms=ALGORITHMS,
    configs=CONFIGS,
    runs: int = 25,
    split_seed_base: int = 1000,
    fit_seed_base: int = 2000,
    test_fraction: float = 0.3,
    n_clusters: int = 2,
    entropy_threshold: float = 0.0,
    variance_threshold: float = 0.95,
    collect_traces: bool = False,
):
    """Average every (config, algorithm) cell over seeded repeated runs.

    Run ``i`` uses split seed ``split_seed_base + i`` and fit seed
    ``fit_seed_base + i``; the feature stages of a run are fitted once and
    shared across cells.  Returns the cell list (and the per-iteration error
    traces of the last run when ``collect_traces`` is set).
    """
    if runs < 1:
        raise InvalidConfigError("runs must be >= 1, got %d" % runs)
    for config in configs:
        if config not in CONFIGS:
            raise InvalidConfigError("unknown config %r" % config)
    labels = np.asarray(labels, dtype=bool)
    cleaned, _ = preprocess.clean(matrix)
    scores: dict[tuple, dict] = {
        (c, a): {"train": [], "test": [], "iters": [], "conv": []}
        for c in configs
        for a in algorithms
    }
    traces: dict[tuple, object] = {}
    for run in range(runs):
        split = stratified_split(labels, test_fraction=test_fraction, seed=split_seed_base + run)
        y_train, y_test = labels[split.train], labels[split.test]
        for config in configs:
            stages = _fit_stages(
                cleaned, split.train, config, entropy_threshold, variance_threshold, None
            )
            X_train = stages.features.take_rows(split.train)
            X_test = stages.features.take_rows(split.test)
            for algorithm in algorithms:
                model, W_train, trace = clustering.fit(
                    algorithm, X_train, n_clusters=n_clusters, seed=fit_seed_base + run
                )
                W_test = clustering.predict(model, X_test)
                result = evaluate_memberships(W_train, W_test, y_train, y_test)
                cell = scores[(config, algorithm)]
                cell["train"].append(result.mse_train)
                cell["test"].append(result.mse_test)
                cell["iters"].append(trace.iterations)
                cell["conv"].append(trace.converged)
                if collect_traces:
                    traces[(config, algorithm)] = trace
    cells = []
    for (config, algorithm), cell in scores.items():
        mse_train = float(np.mean(cell["train"]))
        mse_test = float(np.mean(cell["test"]))
        cells.append(
            AblationCell(
                config=config,
                algorithm=algorithm,
                runs=runs,
                mse_train=mse_train,
                mse_test=mse_test,
                std=float(np.std(cell["test"])),
                train_std=float(np.std(cell["train"])),
                mean_iterations=float(np.mean(cell["iters"])),
                converged_fraction=float(np.mean(cell["conv"])),
                train_exceeds_test=mse_train > mse_test,
            )
        )
    if collect_traces:
        return cells, traces
    return cells
