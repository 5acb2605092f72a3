"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter, configuration value, or input violates a documented precondition."""


class NumericalFailure(RuntimeError):
    """A numerical routine failed to reach its accuracy target.

    The best available partial result, when one exists, is attached as
    ``partial`` so callers can inspect it.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ResourceLimitError(RuntimeError):
    """A requested computation would exceed a hard resource cap."""
