"""Exception types shared across the package."""


class CurvscapeError(Exception):
    """Base class for errors raised by curvscape."""


class InputError(CurvscapeError, ValueError):
    """Malformed or invalid input data (graph files, diagrams, configs)."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ComputationError(CurvscapeError):
    """A well-formed input for which the requested quantity does not exist."""


class DisconnectedError(ComputationError):
    pass


class DegenerateMeasureError(ComputationError):
    pass


class ExhaustionError(ComputationError):
    """No valid perturbation candidate remains."""


class UndefinedCorrelationError(ComputationError):
    """Pearson correlation requested for constant or too-short data."""
