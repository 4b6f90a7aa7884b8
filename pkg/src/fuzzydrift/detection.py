"""Streamed anomaly identification and minimal-detectable-drift search.

A fitted pipeline classifies each inspection of a stream; a trailing moving
average turns the 0/1 classifications into a continuous class membership.
Strictly above 0.5 the module state is nOK, otherwise OK — the average is
causal (no lookahead), so verdicts can be produced live.  The drift search
replays a healthy batch at increasing injected drift ratios and reports the
smallest ratio the pipeline detects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import InvalidConfigError
from .pipeline import PipelineModel
from .telemetry import (
    DriftSchedule,
    GeneratorConfig,
    InspectionStream,
    generate_stream,
    inject_drift,
)

DEFAULT_WINDOW = 40
DEFAULT_CPD_GRID = tuple(round(0.01 * i, 2) for i in range(1, 16))


def smooth_classifications(raw, window: int) -> np.ndarray:
    """Trailing mean over the last ``min(window, inspections so far)`` classes."""
    if window < 1:
        raise InvalidConfigError("window must be >= 1, got %d" % window)
    raw = np.asarray(raw, dtype=np.float64)
    cs = np.concatenate([[0.0], np.cumsum(raw)])
    t = np.arange(raw.shape[0])
    start = np.maximum(t - window + 1, 0)
    return (cs[t + 1] - cs[start]) / (t + 1 - start)


@dataclass
class DetectionVerdict:
    """Per-inspection classifications of one stream, with smoothed state."""

    raw_classes: np.ndarray  # 0/1 per inspection
    smoothed: np.ndarray  # trailing-mean class membership, in [0, 1]
    states: np.ndarray  # True where nOK (smoothed strictly above 0.5)
    transition_index: int | None  # first nOK inspection, None if all OK
    window: int

    @property
    def length(self) -> int:
        return self.raw_classes.shape[0]

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "raw_classes": [int(c) for c in self.raw_classes],
            "smoothed": self.smoothed.tolist(),
            "states": ["nOK" if s else "OK" for s in self.states],
            "transition_index": self.transition_index,
        }

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("inspection,raw,smoothed,state\n")
            for t in range(self.length):
                fh.write(
                    "%d,%d,%s,%s\n"
                    % (
                        t,
                        int(self.raw_classes[t]),
                        repr(float(self.smoothed[t])),
                        "nOK" if self.states[t] else "OK",
                    )
                )


def verdict_from_raw(raw, window: int) -> DetectionVerdict:
    """Smooth raw 0/1 classes and apply the strict-0.5 state rule."""
    raw = np.asarray(raw, dtype=np.int64)
    smoothed = smooth_classifications(raw, window)
    states = smoothed > 0.5
    transition = int(np.argmax(states)) if states.any() else None
    return DetectionVerdict(
        raw_classes=raw,
        smoothed=smoothed,
        states=states,
        transition_index=transition,
        window=int(window),
    )


def classify_stream(
    model: PipelineModel, stream: InspectionStream, window: int = DEFAULT_WINDOW
) -> DetectionVerdict:
    """Classify every inspection of a stream through a fitted pipeline."""
    raw = model.classify(stream.samples).astype(np.int64)
    return verdict_from_raw(raw, window)


@dataclass
class CpdResult:
    """Outcome of the minimal-detectable-drift search for one algorithm."""

    algorithm: str
    minimal_ratio: float | None  # smallest grid ratio that fired, None if none
    grid: tuple
    detected: tuple  # per-grid-point firing flags

    @property
    def never_fired(self) -> bool:
        return self.minimal_ratio is None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "minimal_ratio": self.minimal_ratio,
            "grid": list(self.grid),
            "detected": [bool(d) for d in self.detected],
            "never_fired": self.never_fired,
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _drift_fires(model: PipelineModel, stream: InspectionStream, window: int) -> bool:
    """Majority of the ground-truth drifted inspections classified nOK."""
    n_drifted = int(stream.ground_truth.sum())
    if n_drifted == 0:
        return False
    verdict = classify_stream(model, stream, window)
    return int(verdict.states[stream.ground_truth].sum()) * 2 > n_drifted


def minimal_cpd(
    pipeline_factory,
    algorithm: str,
    grid=DEFAULT_CPD_GRID,
    *,
    healthy: FeatureMatrix,
    window: int = DEFAULT_WINDOW,
) -> CpdResult:
    """Smallest injected drift ratio the algorithm's pipeline detects.

    ``pipeline_factory(algorithm)`` supplies the fitted pipeline; the same
    healthy batch is replayed at every grid ratio so only the drift differs.
    A ratio of zero carries no drifted inspections and can never fire.
    """
    grid = tuple(float(r) for r in grid)
    if not grid:
        raise InvalidConfigError("drift grid is empty")
    if any(r < 0 for r in grid):
        raise InvalidConfigError("drift ratios must be >= 0")
    if list(grid) != sorted(grid):
        raise InvalidConfigError("drift grid must be sorted ascending")
    model = pipeline_factory(algorithm)
    detected = []
    minimal = None
    for ratio in grid:
        drifted = inject_drift(healthy, ratio)
        n = drifted.n_samples
        stream = InspectionStream(
            samples=drifted,
            schedule=DriftSchedule(degradation_rate=ratio, onset_inspection=0, profile="step"),
            drift=np.full(n, ratio),
            ground_truth=np.full(n, ratio > 0.0),
        )
        fired = _drift_fires(model, stream, window)
        detected.append(fired)
        if fired and minimal is None:
            minimal = ratio
    return CpdResult(
        algorithm=algorithm, minimal_ratio=minimal, grid=grid, detected=tuple(detected)
    )


@dataclass
class IdentificationReport:
    """Verdicts for a family of streams differing only in degradation rate."""

    rates: tuple
    verdicts: list  # DetectionVerdict per rate, aligned with rates
    length: int
    window: int

    @property
    def transition_indices(self) -> list:
        return [v.transition_index for v in self.verdicts]

    def to_dict(self) -> dict:
        return {
            "rates": list(self.rates),
            "length": self.length,
            "window": self.window,
            "transition_indices": self.transition_indices,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def save_curves_csv(self, path) -> None:
        """Smoothed membership curves, one column per degradation rate."""
        headers = ["inspection"] + ["dr_%g" % (100.0 * r) for r in self.rates]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(headers) + "\n")
            for t in range(self.length):
                row = [str(t)] + [repr(float(v.smoothed[t])) for v in self.verdicts]
                fh.write(",".join(row) + "\n")


def run_anomaly_identification(
    model: PipelineModel,
    base: GeneratorConfig,
    rates,
    length: int = 150,
    window: int = DEFAULT_WINDOW,
    seed=0,
    onset: int = 0,
    profile: str = "linear_ramp",
) -> IdentificationReport:
    """Classify one stream per degradation rate; zero rate must be included.

    Every stream reuses the same generator seed, so the nominal telemetry is
    identical across rates and only the drift profile differs.
    """
    rates = tuple(float(r) for r in rates)
    if 0.0 not in rates:
        raise InvalidConfigError("rates must include 0 as the no-degradation reference")
    verdicts = []
    for rate in rates:
        schedule = DriftSchedule(degradation_rate=rate, onset_inspection=onset, profile=profile)
        stream = generate_stream(base, schedule, length, seed)
        verdicts.append(classify_stream(model, stream, window))
    return IdentificationReport(rates=rates, verdicts=verdicts, length=length, window=window)
