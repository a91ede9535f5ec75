"""Market microstructure signals and an event-driven futures backtester."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    MicrostratError,
    NonConvergenceError,
    NumericalError,
)

__all__ = [
    "__version__",
    "MicrostratError",
    "DataError",
    "ConfigError",
    "NumericalError",
    "NonConvergenceError",
]
