"""Exception hierarchy shared across the package."""


class QwatchError(Exception):
    """Base class for package-specific failures."""


class SchemaError(QwatchError):
    """A persisted artifact (CSV, model snapshot, journal) violates its schema."""


class ZeroWidthIntervalError(QwatchError):
    """Scalar interval distance hit a zero-width interval with epsilon = 0."""
