"""Shared fixtures: a small labeled telemetry set and CSV copies of it."""

import numpy as np
import pytest

from fuzzydrift import dataset, telemetry


@pytest.fixture(scope="session")
def tiny_labeled():
    """Small labeled mixture, big enough for every pipeline stage to fit."""
    config = telemetry.GeneratorConfig(samples=500, noise_level=0.007)
    matrix, labels = telemetry.make_labeled_dataset(
        config, telemetry.AnomalyMixConfig(), seed=42
    )
    return config, matrix, labels


@pytest.fixture(scope="session")
def tiny_labeled_csv(tiny_labeled, tmp_path_factory):
    """The tiny labeled set written out as (data.csv, labels.csv) paths."""
    _, matrix, labels = tiny_labeled
    root = tmp_path_factory.mktemp("tinydata")
    data_path = root / "data.csv"
    labels_path = root / "labels.csv"
    dataset.write_csv(matrix, data_path)
    dataset.write_labels_csv(labels, labels_path)
    return str(data_path), str(labels_path)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
