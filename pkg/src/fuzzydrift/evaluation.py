"""Scoring fitted partitions against ground-truth drift labels.

Clusters carry no labels of their own, so scoring a two-cluster fit means:
harden memberships by argmax, try both ways of naming the clusters
(healthy/anomalous), keep the naming with the lower error on the training
split, and report the squared-error rate of that fixed naming on train and
test.  Labels are booleans, so the mean squared error equals the fraction of
misassigned samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import InsufficientDataError, InvalidConfigError, InvalidDataError

DEFAULT_TEST_FRACTION = 0.3


@dataclass(frozen=True)
class SplitIndices:
    """Row indices of one train/test partition of a labeled dataset."""

    train: np.ndarray
    test: np.ndarray


def stratified_split(labels, test_fraction: float = DEFAULT_TEST_FRACTION, seed=0) -> SplitIndices:
    """Seeded train/test split preserving the class mix.

    Each class is shuffled independently and ``round(n_class * test_fraction)``
    of its rows go to the test side.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InvalidDataError("labels must be 1-D")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfigError("test_fraction must lie in (0, 1), got %g" % test_fraction)
    if labels.size < 2:
        raise InsufficientDataError("need at least 2 samples to split, got %d" % labels.size)
    rng = np.random.default_rng(seed)
    train_parts = []
    test_parts = []
    for value in np.unique(labels):
        idx = np.nonzero(labels == value)[0]
        idx = idx[rng.permutation(idx.size)]
        n_test = round(idx.size * test_fraction)
        test_parts.append(idx[:n_test])
        train_parts.append(idx[n_test:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    if train.size == 0 or test.size == 0:
        raise InsufficientDataError(
            "split produced an empty side (%d train / %d test)" % (train.size, test.size)
        )
    return SplitIndices(train=train, test=test)


def hard_assignments(weights) -> np.ndarray:
    """Collapse membership weights to the index of the strongest cluster."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2:
        raise InvalidDataError("membership matrix must be 2-D")
    return np.argmax(weights, axis=1)


def label_error(assignments, cluster_labels, labels) -> float:
    """Mean squared error of boolean predictions under a fixed cluster naming."""
    assignments = np.asarray(assignments)
    labels = np.asarray(labels, dtype=bool)
    predicted = np.asarray(cluster_labels, dtype=bool)[assignments]
    return float(np.mean((predicted.astype(float) - labels.astype(float)) ** 2))


def best_label_mapping(assignments, labels) -> np.ndarray:
    """Cluster naming (one boolean per cluster) minimizing error on ``labels``.

    Tries every permutation of the class labels across clusters and keeps the
    first one achieving the minimum, so ties resolve deterministically.
    Requires exactly two clusters, matching the healthy/anomalous setting.
    """
    assignments = np.asarray(assignments)
    n_clusters = int(assignments.max(initial=-1)) + 1
    if n_clusters > 2:
        raise InvalidConfigError(
            "label mapping is defined for 2 clusters, saw assignment %d" % (n_clusters - 1)
        )
    best = None
    best_err = np.inf
    for combo in permutations((False, True)):
        err = label_error(assignments, combo, labels)
        if err < best_err:
            best_err = err
            best = combo
    return np.asarray(best, dtype=bool)


@dataclass(frozen=True)
class EvaluationResult:
    """Train/test misassignment rates under the best train-side naming."""

    mse_train: float
    mse_test: float
    cluster_labels: np.ndarray


def evaluate_assignments(train_assignments, test_assignments, train_labels, test_labels) -> EvaluationResult:
    """Score hardened train/test assignments with a train-chosen naming."""
    mapping = best_label_mapping(train_assignments, train_labels)
    return EvaluationResult(
        mse_train=label_error(train_assignments, mapping, train_labels),
        mse_test=label_error(test_assignments, mapping, test_labels),
        cluster_labels=mapping,
    )


def evaluate_memberships(train_weights, test_weights, train_labels, test_labels) -> EvaluationResult:
    """Convenience wrapper: argmax-harden memberships, then score."""
    return evaluate_assignments(
        hard_assignments(train_weights),
        hard_assignments(test_weights),
        train_labels,
        test_labels,
    )
