"""Exception types shared across the package."""


class SurvefsError(Exception):
    """Base class for package errors."""


class ConfigError(SurvefsError):
    """Invalid configuration: bad enum value, malformed schema, missing key."""


class DataError(SurvefsError):
    """Data violates a precondition: bad values, degenerate structure."""
