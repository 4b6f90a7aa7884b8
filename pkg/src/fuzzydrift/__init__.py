"""Fuzzy-clustering change detection for optical-amplifier telemetry."""

__version__ = "0.1.0"
