"""Synthetic optical-amplifier telemetry with controllable pump-current drift.

The generator models a dual-stage, twelve-pump amplifier running in constant
gain mode.  Two operating knobs (composite input power and effective gain
demand) drive the non-constant channels through per-feature linear responses
plus Gaussian measurement noise, which gives the dataset a deliberate low-rank
covariance: almost all variance concentrates in a handful of directions, the
way fleet telemetry does when one module is swept over its operating grid.

Channels come in three kinds:

* pump drive channels, two per pump laser: the drive-current ratio (actual
  current over factory nominal) and the electrical drive power, which is
  proportional to the current at a near-constant forward voltage.  A healthy
  module sits at its nominal drive regardless of operating point; as a pump
  ages, the controller raises the current -- and with it the drive power --
  by the same factor to hold output.  These are the columns that
  :func:`inject_drift` scales by ``1 + ratio``.
* operating channels (monitored input power, VOA attenuation, cooling
  margin) that respond to the two knobs,
* constant configuration echoes (setpoints, firmware versions, alarm
  thresholds) that carry no information and exist so that feature selection
  has something to remove.

Streams model a sequence of inspections of one module: each inspection is an
independent operating point, and a drift schedule scales the drive channels
over time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureMatrix
from .errors import InvalidConfigError, MissingFeatureError

_SQRT12 = math.sqrt(12.0)

# Feature response table: (name, kind, base, gain_load, input_load, noise_scale).
# Loads are feature units per one standard deviation of the (uniform) knob;
# noise std is noise_level * noise_scale, with noise_scale set to the feature's
# nominal magnitude so the default noise level reads as a fraction of base.
# The "dyn_input" load is filled in from the configured input range so the
# monitor channel spans it.  Drive channels carry only a weak operating-point
# response (the controller holds them near nominal); their variance in a mixed
# fleet comes from aging, not from the knobs.
_DRIFT = "drift"
_SIGNAL = "signal"
_CONST = "constant"

_SCHEMA = [
    ("opt_input_power_dbm", _SIGNAL, None, 0.0, "dyn_input", 17.0),
    ("opt_voa_attenuation_db", _SIGNAL, 4.0, 1.56, -0.90, 4.0),
    ("cfg_gain_mode", _CONST, 2.0, 0.0, 0.0, 0.0),
    ("cfg_target_gain_db", _CONST, 23.0, 0.0, 0.0, 0.0),
    ("cfg_max_output_power_dbm", _CONST, 20.0, 0.0, 0.0, 0.0),
    ("cfg_channel_count", _CONST, 10.0, 0.0, 0.0, 0.0),
    ("el_s1_pumpa_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s1_pumpb_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s1_pumpc_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s1_pumpd_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s1_pumpa_power_mw", _DRIFT, 320.0, 0.64, -0.48, 320.0),
    ("el_s1_pumpb_power_mw", _DRIFT, 340.0, 0.68, -0.51, 340.0),
    ("el_s1_pumpc_power_mw", _DRIFT, 355.0, 0.71, -0.53, 355.0),
    ("el_s1_pumpd_power_mw", _DRIFT, 335.0, 0.67, -0.50, 335.0),
    ("cfg_s1_pump_count", _CONST, 4.0, 0.0, 0.0, 0.0),
    ("el_s2_pumpa_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpb_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpc_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpd_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpe_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpf_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpg_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumph_current_ratio", _DRIFT, 1.0, 0.0020, -0.0015, 1.0),
    ("el_s2_pumpa_power_mw", _DRIFT, 480.0, 0.96, -0.72, 480.0),
    ("el_s2_pumpb_power_mw", _DRIFT, 505.0, 1.01, -0.76, 505.0),
    ("el_s2_pumpc_power_mw", _DRIFT, 520.0, 1.04, -0.78, 520.0),
    ("el_s2_pumpd_power_mw", _DRIFT, 495.0, 0.99, -0.74, 495.0),
    ("el_s2_pumpe_power_mw", _DRIFT, 510.0, 1.02, -0.77, 510.0),
    ("el_s2_pumpf_power_mw", _DRIFT, 530.0, 1.06, -0.80, 530.0),
    ("el_s2_pumpg_power_mw", _DRIFT, 545.0, 1.09, -0.82, 545.0),
    ("el_s2_pumph_power_mw", _DRIFT, 560.0, 1.12, -0.84, 560.0),
    ("cfg_s2_pump_count", _CONST, 8.0, 0.0, 0.0, 0.0),
    ("cfg_alarm_current_ratio_max", _CONST, 1.10, 0.0, 0.0, 0.0),
    ("cfg_supply_voltage_nominal_v", _CONST, 5.25, 0.0, 0.0, 0.0),
    ("tmp_cooling_margin_c", _SIGNAL, 12.0, -3.12, -1.80, 12.0),
    ("tmp_tec_setpoint_c", _CONST, 25.0, 0.0, 0.0, 0.0),
    ("cfg_fan_setpoint_rpm", _CONST, 6000.0, 0.0, 0.0, 0.0),
    ("st_shutter_open", _CONST, 1.0, 0.0, 0.0, 0.0),
    ("cfg_fw_version_major", _CONST, 12.0, 0.0, 0.0, 0.0),
    ("cfg_fw_version_minor", _CONST, 7.0, 0.0, 0.0, 0.0),
    ("cfg_alarm_los_threshold_dbm", _CONST, -40.0, 0.0, 0.0, 0.0),
]

_N_CONSTANTS_AVAILABLE = sum(1 for row in _SCHEMA if row[1] == _CONST)
_N_INFORMATIVE = len(_SCHEMA) - _N_CONSTANTS_AVAILABLE


@dataclass(frozen=True)
class GeneratorConfig:
    """Shape and noise of a generated dataset.

    ``constant_features`` selects how many of the constant configuration-echo
    channels are included (they are what entropy-based selection removes);
    the informative channel set is fixed, so the total feature count is
    ``27 + constant_features`` (41 with the default 14).
    """

    samples: int
    constant_features: int = 14
    noise_level: float = 0.01
    input_power_range_dbm: tuple[float, float] = (-35.0, 1.0)
    gain_range_db: tuple[float, float] = (19.0, 35.0)
    max_output_power_dbm: float = 20.0

    def __post_init__(self):
        if self.samples <= 0:
            raise InvalidConfigError(f"samples must be positive, got {self.samples}")
        if not 0 <= self.constant_features <= _N_CONSTANTS_AVAILABLE:
            raise InvalidConfigError(
                f"constant_features must be in [0, {_N_CONSTANTS_AVAILABLE}], "
                f"got {self.constant_features}"
            )
        if self.noise_level < 0:
            raise InvalidConfigError(f"noise_level must be >= 0, got {self.noise_level}")
        for lo, hi, what in (
            (*self.input_power_range_dbm, "input_power_range_dbm"),
            (*self.gain_range_db, "gain_range_db"),
        ):
            if not lo < hi:
                raise InvalidConfigError(f"{what} must be an increasing pair, got ({lo}, {hi})")

    @property
    def n_features(self) -> int:
        return _N_INFORMATIVE + self.constant_features

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "constant_features": self.constant_features,
            "noise_level": self.noise_level,
            "input_power_range_dbm": list(self.input_power_range_dbm),
            "gain_range_db": list(self.gain_range_db),
            "max_output_power_dbm": self.max_output_power_dbm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(
            samples=int(d["samples"]),
            constant_features=int(d.get("constant_features", 14)),
            noise_level=float(d.get("noise_level", 0.01)),
            input_power_range_dbm=tuple(d.get("input_power_range_dbm", (-35.0, 1.0))),
            gain_range_db=tuple(d.get("gain_range_db", (19.0, 35.0))),
            max_output_power_dbm=float(d.get("max_output_power_dbm", 20.0)),
        )


@dataclass(frozen=True)
class DriftSchedule:
    """Time profile of pump-current drift over a stream of inspections.

    ``degradation_rate`` is the fractional drift reached at the end of the
    stream for the ramp profile, or held from onset onward for the step
    profile.  An inspection counts as ground-truth drifted when its
    instantaneous drift is strictly positive.
    """

    degradation_rate: float
    onset_inspection: int = 0
    profile: str = "linear_ramp"

    def __post_init__(self):
        if not 0.0 <= self.degradation_rate <= 1.0:
            raise InvalidConfigError(
                f"degradation_rate must be in [0, 1], got {self.degradation_rate}"
            )
        if self.onset_inspection < 0:
            raise InvalidConfigError(f"onset_inspection must be >= 0, got {self.onset_inspection}")
        if self.profile not in ("linear_ramp", "step"):
            raise InvalidConfigError(f"unknown profile {self.profile!r}")

    def drift_at(self, inspection: int, length: int) -> float:
        """Instantaneous fractional drift at a given inspection index."""
        if not 0 <= inspection < length:
            raise InvalidConfigError(f"inspection {inspection} outside stream of length {length}")
        if self.onset_inspection >= length:
            raise InvalidConfigError(
                f"onset {self.onset_inspection} outside stream of length {length}"
            )
        if inspection < self.onset_inspection:
            return 0.0
        if self.profile == "step":
            return self.degradation_rate
        span = (length - 1) - self.onset_inspection
        if span == 0:
            return self.degradation_rate
        return self.degradation_rate * (inspection - self.onset_inspection) / span

    def to_dict(self) -> dict:
        return {
            "degradation_rate": self.degradation_rate,
            "onset_inspection": self.onset_inspection,
            "profile": self.profile,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSchedule":
        return cls(
            degradation_rate=float(d["degradation_rate"]),
            onset_inspection=int(d.get("onset_inspection", 0)),
            profile=str(d.get("profile", "linear_ramp")),
        )


@dataclass(frozen=True)
class AnomalyMixConfig:
    """How drifted samples are mixed into a labeled dataset.

    Drifted modules fall into two age groups, each with a lognormal ratio
    distribution on top of a common floor: a minority that entered
    degradation recently (small ratios, broad spread) and an established
    group well into wear-out (larger ratios, tight spread).  Ratios are
    capped at ``ratio_cap``, the end-of-life drive limit.
    """

    fraction: float = 0.45
    ratio_floor: float = 0.01
    ratio_cap: float = 0.45
    early_fraction: float = 0.22
    early_median: float = 0.025
    early_sigma: float = 0.40
    main_median: float = 0.105
    main_sigma: float = 0.135

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise InvalidConfigError(f"fraction must be in (0, 1), got {self.fraction}")
        if not 0.0 <= self.early_fraction <= 1.0:
            raise InvalidConfigError(
                f"early_fraction must be in [0, 1], got {self.early_fraction}"
            )
        if self.ratio_floor < 0:
            raise InvalidConfigError(f"ratio_floor must be >= 0, got {self.ratio_floor}")
        if min(self.early_median, self.main_median) <= 0:
            raise InvalidConfigError("ratio medians must be positive")
        if min(self.early_sigma, self.main_sigma) < 0:
            raise InvalidConfigError("ratio sigmas must be >= 0")
        if self.ratio_cap <= self.ratio_floor:
            raise InvalidConfigError("ratio_cap must exceed ratio_floor")

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "ratio_floor": self.ratio_floor,
            "ratio_cap": self.ratio_cap,
            "early_fraction": self.early_fraction,
            "early_median": self.early_median,
            "early_sigma": self.early_sigma,
            "main_median": self.main_median,
            "main_sigma": self.main_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyMixConfig":
        defaults = cls()
        return cls(
            **{
                name: type(getattr(defaults, name))(d.get(name, getattr(defaults, name)))
                for name in (
                    "fraction",
                    "ratio_floor",
                    "ratio_cap",
                    "early_fraction",
                    "early_median",
                    "early_sigma",
                    "main_median",
                    "main_sigma",
                )
            }
        )


@dataclass
class InspectionStream:
    """A time-ordered stream of inspections of a single module."""

    samples: FeatureMatrix
    schedule: DriftSchedule
    drift: np.ndarray  # instantaneous fractional drift per inspection
    ground_truth: np.ndarray  # True where the inspection is drifted

    @property
    def length(self) -> int:
        return self.samples.n_samples


def _active_schema(config: GeneratorConfig):
    """Schema rows for this config: all informative rows plus the first
    ``constant_features`` constant rows, in canonical column order."""
    kept = []
    constants_used = 0
    for row in _SCHEMA:
        if row[1] == _CONST:
            if constants_used < config.constant_features:
                kept.append(row)
                constants_used += 1
        else:
            kept.append(row)
    return kept


def feature_names(config: GeneratorConfig | None = None) -> list[str]:
    config = config or GeneratorConfig(samples=1)
    return [row[0] for row in _active_schema(config)]


def pump_current_features(config: GeneratorConfig | None = None) -> list[str]:
    """Names of the pump drive channels (current ratios and drive powers)
    that drift scales."""
    config = config or GeneratorConfig(samples=1)
    return [row[0] for row in _active_schema(config) if row[1] == _DRIFT]


def constant_features(config: GeneratorConfig | None = None) -> list[str]:
    config = config or GeneratorConfig(samples=1)
    return [row[0] for row in _active_schema(config) if row[1] == _CONST]


def _resolve(row, config: GeneratorConfig):
    """Fill dynamic entries of a schema row from the configured knob ranges."""
    name, kind, base, gain_load, input_load, noise_scale = row
    in_lo, in_hi = config.input_power_range_dbm
    if input_load == "dyn_input":
        input_load = (in_hi - in_lo) / _SQRT12
        base = 0.5 * (in_lo + in_hi)
    return name, kind, float(base), float(gain_load), float(input_load), float(noise_scale)


def generate_dataset(config: GeneratorConfig, seed: int) -> FeatureMatrix:
    """Nominal (drift-free) telemetry: deterministic for a fixed (config, seed)."""
    rng = np.random.default_rng(seed)
    n = config.samples
    in_lo, in_hi = config.input_power_range_dbm
    g_lo, g_hi = config.gain_range_db
    u_input = rng.uniform(in_lo, in_hi, n)
    u_gain = rng.uniform(g_lo, g_hi, n)
    # standardized knobs (uniform: std = range / sqrt(12))
    z_input = (u_input - 0.5 * (in_lo + in_hi)) / ((in_hi - in_lo) / _SQRT12)
    z_gain = (u_gain - 0.5 * (g_lo + g_hi)) / ((g_hi - g_lo) / _SQRT12)

    schema = _active_schema(config)
    values = np.empty((n, len(schema)), dtype=np.float64)
    for col, row in enumerate(schema):
        name, kind, base, gain_load, input_load, noise_scale = _resolve(row, config)
        if kind == _CONST:
            values[:, col] = base
            continue
        noise = rng.standard_normal(n) * (config.noise_level * noise_scale)
        values[:, col] = base + gain_load * z_gain + input_load * z_input + noise
    return FeatureMatrix([row[0] for row in schema], values)


def _apply_drift(matrix: FeatureMatrix, ratios, pump_names) -> FeatureMatrix:
    """Scale the pump drive columns of each row by (1 + ratio_row)."""
    ratios = np.asarray(ratios, dtype=np.float64)
    out = matrix.copy()
    for name in pump_names:
        if name not in out.feature_names:
            raise MissingFeatureError(f"pump-current feature {name!r} not in matrix")
        idx = out.feature_names.index(name)
        out.values[:, idx] *= 1.0 + ratios
    return out


def inject_drift(matrix: FeatureMatrix, ratio: float, pump_names=None) -> FeatureMatrix:
    """Copy of ``matrix`` with every pump drive column scaled by (1 + ratio)."""
    if ratio < 0:
        raise InvalidConfigError(f"drift ratio must be >= 0, got {ratio}")
    if pump_names is None:
        pump_names = pump_current_features()
    return _apply_drift(matrix, np.full(matrix.n_samples, float(ratio)), pump_names)


def generate_stream(
    config: GeneratorConfig, schedule: DriftSchedule, length: int, seed: int
) -> InspectionStream:
    """Inspection stream with drift applied per the schedule.

    Each inspection is an independent operating point of the same module;
    the pump drive channels are scaled by the schedule's instantaneous drift.
    """
    if length <= 0:
        raise InvalidConfigError(f"length must be positive, got {length}")
    if schedule.onset_inspection >= length:
        raise InvalidConfigError(
            f"onset {schedule.onset_inspection} outside stream of length {length}"
        )
    base_config = GeneratorConfig(
        samples=length,
        constant_features=config.constant_features,
        noise_level=config.noise_level,
        input_power_range_dbm=config.input_power_range_dbm,
        gain_range_db=config.gain_range_db,
        max_output_power_dbm=config.max_output_power_dbm,
    )
    nominal = generate_dataset(base_config, seed)
    drift = np.array([schedule.drift_at(t, length) for t in range(length)])
    samples = _apply_drift(nominal, drift, pump_current_features(config))
    return InspectionStream(
        samples=samples, schedule=schedule, drift=drift, ground_truth=drift > 0.0
    )


def make_labeled_dataset(
    config: GeneratorConfig, mix: AnomalyMixConfig, seed: int
) -> tuple[FeatureMatrix, np.ndarray]:
    """Nominal/drifted mixture for training and evaluation.

    Exactly ``round(samples * fraction)`` rows are drifted, each with its own
    ratio drawn from the mix distribution.  Returns (matrix, boolean labels).
    """
    nominal = generate_dataset(config, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    n = config.samples
    n_drifted = int(round(n * mix.fraction))
    if n_drifted == 0 or n_drifted == n:
        raise InvalidConfigError("mix fraction leaves a single class at this sample count")
    drifted_idx = rng.permutation(n)[:n_drifted]
    labels = np.zeros(n, dtype=bool)
    labels[drifted_idx] = True
    early = rng.random(n_drifted) < mix.early_fraction
    median = np.where(early, mix.early_median, mix.main_median)
    sigma = np.where(early, mix.early_sigma, mix.main_sigma)
    raw = mix.ratio_floor + np.exp(np.log(median) + sigma * rng.standard_normal(n_drifted))
    ratios = np.zeros(n)
    ratios[drifted_idx] = np.minimum(raw, mix.ratio_cap)
    return _apply_drift(nominal, ratios, pump_current_features(config)), labels


def save_config(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_generator_config(path) -> GeneratorConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return GeneratorConfig.from_dict(json.load(fh))


def load_schedule(path) -> DriftSchedule:
    with open(path, "r", encoding="utf-8") as fh:
        return DriftSchedule.from_dict(json.load(fh))
