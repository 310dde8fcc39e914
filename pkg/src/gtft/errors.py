"""Exception types raised across the package."""


class GTFTError(Exception):
    """Base class for all package errors."""


class DimensionError(GTFTError, ValueError):
    """Operand shapes are incompatible."""


class SizeLimitError(GTFTError, ValueError):
    """Requested instance exceeds the configured maximum matrix size."""


class TopologyError(GTFTError, ValueError):
    """Invalid family / size combination for a graph sequence."""


class ConvergenceError(GTFTError, RuntimeError):
    """An iterative routine did not reach its tolerance within the budget."""


class DivergenceError(GTFTError, RuntimeError):
    """An optimization run left the bounded region (iterate norm too large)."""
