import json
import math

import numpy as np
import pytest

from fuzzydrift.dataset import FeatureMatrix
from fuzzydrift.errors import (
    EmptyResultError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidDataError,
)
from fuzzydrift.feature_select import (
    EntropyReport,
    default_bins,
    entropy_report,
    feature_entropy,
    select_features,
)


def _entropy_oracle(column, bins):
    """Direct histogram entropy, written independently of the library."""
    lo, hi = min(column), max(column)
    if lo == hi:
        return 0.0
    counts = [0] * bins
    width = (hi - lo) / bins
    for v in column:
        idx = min(int((v - lo) / width), bins - 1)
        counts[idx] += 1
    total = len(column)
    return -sum(
        (c / total) * math.log(c / total) for c in counts if c > 0
    )


def test_default_bins_is_ceil_sqrt():
    assert default_bins(1) == 1
    assert default_bins(2) == 2
    assert default_bins(100) == 10
    assert default_bins(101) == 11
    with pytest.raises(InsufficientDataError):
        default_bins(0)


def test_entropy_matches_hand_histogram():
    column = np.array([0.0, 0.0, 0.0, 1.0])
    expected = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    assert feature_entropy(column, bins=2) == pytest.approx(expected, abs=1e-15)


def test_entropy_matches_oracle_on_random_columns(rng):
    for _ in range(20):
        n = int(rng.integers(5, 200))
        bins = int(rng.integers(2, 20))
        column = rng.normal(size=n)
        assert feature_entropy(column, bins) == pytest.approx(
            _entropy_oracle(column.tolist(), bins), abs=1e-9
        )


def test_entropy_of_constant_is_exactly_zero():
    assert feature_entropy(np.full(50, 3.7), bins=10) == 0.0


def test_entropy_upper_bound_is_log_bins(rng):
    column = rng.uniform(size=5000)
    h = feature_entropy(column, bins=8)
    assert h <= math.log(8) + 1e-12
    assert h > 0.9 * math.log(8)  # near-uniform data approaches the bound


def test_balanced_two_level_column_reaches_log2():
    column = np.array([0.0, 1.0] * 10)
    assert feature_entropy(column, bins=2) == pytest.approx(math.log(2.0))


def test_entropy_validation():
    with pytest.raises(InsufficientDataError):
        feature_entropy(np.array([]), bins=4)
    with pytest.raises(InvalidConfigError):
        feature_entropy(np.array([1.0, 2.0]), bins=0)
    with pytest.raises(InvalidDataError):
        feature_entropy(np.array([1.0, float("nan")]), bins=4)
    with pytest.raises(InvalidConfigError):
        feature_entropy(np.zeros((2, 2)), bins=4)


def _mixed_matrix(rng):
    return FeatureMatrix(
        ["noisy", "flat_a", "steps", "flat_b"],
        np.column_stack(
            [
                rng.normal(size=60),
                np.full(60, 2.0),
                np.repeat([0.0, 1.0, 2.0], 20),
                np.full(60, -1.0),
            ]
        ),
    )


def test_report_sorted_descending_and_selection_in_original_order(rng):
    matrix = _mixed_matrix(rng)
    report = entropy_report(matrix, threshold=0.0)
    assert report.entropies == sorted(report.entropies, reverse=True)
    assert report.selected == ["noisy", "steps"]  # original column order kept
    assert set(report.feature_names) == set(matrix.feature_names)
    assert report.bins == default_bins(60)


def test_selection_threshold_is_strict(rng):
    matrix = _mixed_matrix(rng)
    selected, report = select_features(matrix, threshold=0.0)
    assert selected.feature_names == ["noisy", "steps"]
    # thresholding at the top entropy removes everything (strict comparison)
    with pytest.raises(EmptyResultError):
        select_features(matrix, threshold=max(report.entropies))


def test_all_constant_matrix_yields_empty_selection():
    matrix = FeatureMatrix(["a", "b"], np.ones((10, 2)))
    with pytest.raises(EmptyResultError):
        select_features(matrix)


def test_report_round_trip_and_files(tmp_path, rng):
    report = entropy_report(_mixed_matrix(rng))
    back = EntropyReport.from_dict(report.to_dict())
    assert back == report

    json_path = tmp_path / "entropy.json"
    report.save_json(json_path)
    assert EntropyReport.from_dict(json.loads(json_path.read_text())) == report

    csv_path = tmp_path / "entropy.csv"
    report.save_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "feature,entropy,selected"
    assert len(lines) == 1 + len(report.feature_names)
    flags = {row.split(",")[0]: row.split(",")[2] for row in lines[1:]}
    assert flags["flat_a"] == "0"
    assert flags["noisy"] == "1"
