"""Exception types shared across the toolkit."""


class ImetError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(ImetError):
    """Tensor or parameter shapes are incompatible with an operation."""


class ConfigError(ImetError):
    """A hyperparameter or run setting is out of its valid range."""


class LabelError(ImetError):
    """A class label is outside [0, n_classes)."""


class StateError(ImetError):
    """An operation was called in the wrong lifecycle state."""


class ArchiveError(ImetError):
    """A dataset archive is missing keys or internally inconsistent."""


class SamplingError(ImetError):
    """A sampler cannot satisfy its quota from the available data."""


class CurveError(ImetError):
    """An ROC curve is undefined for the given labels."""
