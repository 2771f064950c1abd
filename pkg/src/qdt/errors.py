"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(RuntimeError):
    """An iterative routine failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DegenerateEvidenceError(PreconditionError):
    """Both hypotheses assign zero likelihood to the observed state."""


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
