import math

import numpy as np
import pytest

from fuzzydrift.dataset import FeatureMatrix
from fuzzydrift.errors import (
    EmptyResultError,
    InsufficientDataError,
    InvalidDataError,
    ShapeMismatchError,
)
from fuzzydrift.preprocess import (
    CleanReport,
    ScalerModel,
    clean,
    fit_scaler,
    transform,
)


def _messy_matrix():
    nan = float("nan")
    return FeatureMatrix(
        ["keep", "dup_of_keep", "missing", "junk", "constant", "other"],
        np.array(
            [
                [1.0, 1.0, nan, 7.0, 5.0, 0.1],
                [2.0, 2.0, nan, 8.0, 5.0, 0.2],
                [3.0, 3.0, nan, 9.0, 5.0, 0.3],
            ]
        ),
    )


def test_clean_drops_and_reports():
    cleaned, report = clean(_messy_matrix(), irrelevant=["junk"])
    assert cleaned.feature_names == ["keep", "constant", "other"]
    reasons = dict(report.dropped)
    assert reasons["junk"] == "listed_irrelevant"
    assert reasons["missing"] == "all_missing"
    assert reasons["dup_of_keep"] == "duplicate:keep"
    assert report.dropped_names == ["dup_of_keep", "missing", "junk"]


def test_clean_keeps_constant_columns():
    cleaned, _ = clean(_messy_matrix())
    assert "constant" in cleaned.feature_names


def test_clean_is_idempotent():
    cleaned, _ = clean(_messy_matrix(), irrelevant=["junk"])
    again, report = clean(cleaned)
    assert again.equals(cleaned)
    assert report.dropped == []


def test_clean_refuses_to_drop_everything():
    matrix = FeatureMatrix(["a"], np.full((3, 1), float("nan")))
    with pytest.raises(EmptyResultError):
        clean(matrix)


def test_scaler_matches_hand_computation():
    matrix = FeatureMatrix(["a", "b"], np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
    scaler = fit_scaler(matrix)
    assert np.allclose(scaler.mean, [3.0, 4.0])
    # population std of {1,3,5} is sqrt(8/3)
    expected_std = math.sqrt(8.0 / 3.0)
    assert np.allclose(scaler.std, [expected_std, expected_std])
    scaled = transform(scaler, matrix)
    assert np.allclose(scaled.values[:, 0], [-2.0 / expected_std, 0.0, 2.0 / expected_std])
    assert np.allclose(scaled.values.mean(axis=0), 0.0, atol=1e-15)
    assert np.allclose(scaled.values.std(axis=0), 1.0)


def test_zero_deviation_features_map_to_zero():
    matrix = FeatureMatrix(["c", "x"], np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
    scaler = fit_scaler(matrix)
    assert scaler.zero_deviation.tolist() == [True, False]
    scaled = transform(scaler, matrix)
    assert np.all(scaled.values[:, 0] == 0.0)


def test_transform_requires_matching_names():
    matrix = FeatureMatrix(["a", "b"], np.ones((3, 2)) * np.arange(3)[:, None])
    scaler = fit_scaler(matrix)
    with pytest.raises(ShapeMismatchError):
        transform(scaler, FeatureMatrix(["b", "a"], matrix.values))


def test_transform_does_not_mutate_input():
    matrix = FeatureMatrix(["a"], np.array([[1.0], [2.0], [3.0]]))
    scaler = fit_scaler(matrix)
    before = matrix.values.copy()
    transform(scaler, matrix)
    assert np.array_equal(matrix.values, before)


def test_scaler_validation():
    with pytest.raises(InsufficientDataError):
        fit_scaler(FeatureMatrix(["a"], np.array([[1.0]])))
    with pytest.raises(InvalidDataError):
        fit_scaler(FeatureMatrix(["a"], np.array([[1.0], [float("nan")]])))
    scaler = fit_scaler(FeatureMatrix(["a"], np.array([[1.0], [2.0]])))
    with pytest.raises(InvalidDataError):
        transform(scaler, FeatureMatrix(["a"], np.array([[float("inf")]])))


def test_scaler_round_trip():
    matrix = FeatureMatrix(["a", "b"], np.random.default_rng(0).normal(size=(20, 2)))
    scaler = fit_scaler(matrix)
    back = ScalerModel.from_dict(scaler.to_dict())
    assert back.feature_names == scaler.feature_names
    assert np.array_equal(back.mean, scaler.mean)
    assert np.array_equal(back.std, scaler.std)
    assert transform(back, matrix).equals(transform(scaler, matrix))


def test_clean_report_is_plain_data():
    report = CleanReport(dropped=[("x", "all_missing")])
    assert report.dropped_names == ["x"]
