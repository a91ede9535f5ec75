"""Exception types shared across the package."""


class MicrostratError(Exception):
    """Base class for package errors."""


class DataError(MicrostratError, ValueError):
    """Malformed or invariant-violating input data."""


class ConfigError(DataError):
    """Invalid or unknown configuration."""


class NumericalError(MicrostratError, RuntimeError):
    """Numerical failure: degenerate inputs, rank deficiency, divergence."""


class NonConvergenceError(NumericalError):
    """An iterative fit did not converge within its budget."""

    def __init__(self, message: str, iterations: int = 0, gradient_norm: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.gradient_norm = gradient_norm
