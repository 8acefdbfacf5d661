"""Exception types shared across the package."""


class ConstructionError(ValueError):
    """A schedule or model could not be built from the given inputs."""


class ValidationError(ValueError):
    """A config or input file failed validation before any work started."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class NumericError(ArithmeticError):
    """A numerical operation produced an invalid result (NaN, negative
    eigenvalue beyond the clamp threshold, ...)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InsufficientDataError(ValueError):
    """Too few samples for the requested estimate."""


class TrainingError(RuntimeError):
    """Training diverged; carries the loss trace up to the failure."""

    def __init__(self, message, loss_trace=None):
        super().__init__(message)
        self.loss_trace = loss_trace
