"""Exception types shared across the package."""


class FuzzydriftError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(FuzzydriftError):
    """A configuration value is out of its admissible range."""


class InvalidDataError(FuzzydriftError):
    """Input data contains non-finite or otherwise unusable values."""


class MissingFeatureError(FuzzydriftError):
    """A required feature column is absent from the input."""


class EmptyResultError(FuzzydriftError):
    """An operation would return an empty result (e.g. every column dropped)."""


class InsufficientDataError(FuzzydriftError):
    """Too few samples to fit the requested model."""


class ShapeMismatchError(FuzzydriftError):
    """Array or column layout does not match the fitted model."""


class DegenerateDataError(FuzzydriftError):
    """Data admits no meaningful fit (e.g. all samples identical)."""
