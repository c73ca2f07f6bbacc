"""Exception types raised across the package."""


class UndefinedMeasureError(ValueError):
    """A risk measure does not exist for the given distribution (infinite tail mean)."""


class InsufficientTailDataError(ValueError):
    """Too few observations above the threshold to fit the tail."""


class SetupError(ValueError):
    """An estimator or chain cannot be started from the given inputs."""


class DataError(ValueError):
    """Malformed input data; ``row`` is the offending 0-based row index when known."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
