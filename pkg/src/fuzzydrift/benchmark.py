"""Pinned synthetic benchmark bundled with the package.

``data/benchmark.json`` fixes every constant of the canonical experiment:
generator shape and noise, anomaly mix, seeds, split fraction, run counts,
the drift-ratio search grid, and the stream settings.  The CLI and the test
suite both read it through :func:`load_benchmark`, so results quoted anywhere
refer to one reproducible configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .dataset import FeatureMatrix
from .errors import InvalidConfigError
from .telemetry import AnomalyMixConfig, GeneratorConfig, make_labeled_dataset


@dataclass(frozen=True)
class Benchmark:
    name: str
    generator: GeneratorConfig
    anomaly_mix: AnomalyMixConfig
    dataset_seed: int
    split_seed: int
    fit_seed: int
    test_fraction: float
    n_clusters: int
    entropy_threshold: float
    pca_variance_threshold: float
    ablation_runs: int
    compare_repeats: int
    compare_samples: int
    compare_seed: int
    cpd_grid: tuple
    cpd_samples: int
    cpd_seed: int
    cpd_window: int
    stream_length: int
    stream_window: int
    stream_rates: tuple
    stream_seed: int
    stream_onset: int
    stream_profile: str

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidConfigError(
                "test_fraction must lie in (0, 1), got %g" % self.test_fraction
            )
        if self.n_clusters < 2:
            raise InvalidConfigError("n_clusters must be >= 2, got %d" % self.n_clusters)
        for field in ("ablation_runs", "compare_repeats", "compare_samples",
                      "cpd_samples", "cpd_window", "stream_length", "stream_window"):
            if getattr(self, field) < 1:
                raise InvalidConfigError("%s must be >= 1" % field)

    def make_dataset(self) -> tuple[FeatureMatrix, "np.ndarray"]:
        """Labeled benchmark dataset (matrix, boolean drift labels)."""
        return make_labeled_dataset(self.generator, self.anomaly_mix, self.dataset_seed)


def benchmark_from_dict(payload: dict) -> Benchmark:
    return Benchmark(
        name=str(payload["name"]),
        generator=GeneratorConfig.from_dict(payload["generator"]),
        anomaly_mix=AnomalyMixConfig.from_dict(payload["anomaly_mix"]),
        dataset_seed=int(payload["dataset_seed"]),
        split_seed=int(payload["split_seed"]),
        fit_seed=int(payload["fit_seed"]),
        test_fraction=float(payload["test_fraction"]),
        n_clusters=int(payload["n_clusters"]),
        entropy_threshold=float(payload["entropy_threshold"]),
        pca_variance_threshold=float(payload["pca_variance_threshold"]),
        ablation_runs=int(payload["ablation_runs"]),
        compare_repeats=int(payload["compare_repeats"]),
        compare_samples=int(payload["compare_samples"]),
        compare_seed=int(payload["compare_seed"]),
        cpd_grid=tuple(float(r) for r in payload["cpd_grid"]),
        cpd_samples=int(payload["cpd_samples"]),
        cpd_seed=int(payload["cpd_seed"]),
        cpd_window=int(payload["cpd_window"]),
        stream_length=int(payload["stream_length"]),
        stream_window=int(payload["stream_window"]),
        stream_rates=tuple(float(r) for r in payload["stream_rates"]),
        stream_seed=int(payload["stream_seed"]),
        stream_onset=int(payload["stream_onset"]),
        stream_profile=str(payload["stream_profile"]),
    )


def load_benchmark(path=None) -> Benchmark:
    """Load the bundled benchmark, or an override file given its path."""
    if path is None:
        text = resources.files("fuzzydrift.data").joinpath("benchmark.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return benchmark_from_dict(json.loads(text))
