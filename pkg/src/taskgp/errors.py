"""Exception types shared across the package."""


class TaskGPError(Exception):
    """Base class for all taskgp errors."""


class InvalidConfig(TaskGPError, ValueError):
    """A configuration value violates its documented constraints."""


class AlreadyRunning(TaskGPError, RuntimeError):
    """A runtime is already live in this process."""


class NotRunning(TaskGPError, RuntimeError):
    """The operation requires a running runtime."""


class TilingError(TaskGPError, ValueError):
    """Requested tile count does not evenly divide the matrix order."""


class DimensionMismatch(TaskGPError, ValueError):
    """Operands have incompatible shapes or tilings."""


class NotPositiveDefinite(TaskGPError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""


class SingularTriangular(TaskGPError, ArithmeticError):
    """Triangular solve against a factor with a zero diagonal entry."""


class NumericalConsistencyError(TaskGPError, ArithmeticError):
    """A computed quantity violates a sanity bound by more than round-off."""


class DivergenceError(TaskGPError, ArithmeticError):
    """Simulated trajectory exceeded the stability guard."""


class ParseError(TaskGPError, ValueError):
    """Malformed input file.

    ``line`` is the 1-based line number at which parsing failed, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
