"""Exception types shared across the library."""


class FiltresError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FiltresError, ValueError):
    """An argument violates an operation's contract."""


class DivergenceError(FiltresError, RuntimeError):
    """A simulated state became non-finite; ``step`` names the sample index."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class DegenerateMatrixError(FiltresError, ValueError):
    """A random matrix has (near-)zero spectral radius and cannot be rescaled."""


class InsufficientDataError(FiltresError, ValueError):
    """A time series or state matrix is too short for the requested operation."""


class ZeroVarianceError(FiltresError, ValueError):
    """Normalized error is undefined because the target has zero variance."""


class ConfigError(FiltresError, ValueError):
    """A configuration file or flag is invalid; the message names the key."""


class ReportShapeError(FiltresError, ValueError):
    """An experiment report lacks the columns a plot-data export needs."""
