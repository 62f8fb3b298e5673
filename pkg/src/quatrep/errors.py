"""Exception types raised across the package."""


class NumericalError(RuntimeError):
    """A solver iterate became non-finite."""


class ClassificationError(ValueError):
    """No class can be assigned (e.g. every class has a zero code block)."""


class DataError(Exception):
    """A dataset, manifest or image could not be loaded."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
