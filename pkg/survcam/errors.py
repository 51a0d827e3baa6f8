"""Exceptions raised by survcam.

Two families map onto the command line exit codes: DataError (2) for bad
inputs and SolverError (3) for LP failures. UsageError (1) covers bad
command lines and configuration values.
"""


class SurvcamError(Exception):
    """Base class of every error raised on purpose by this package."""


class UsageError(SurvcamError, ValueError):
    pass


class DataError(SurvcamError):
    pass


class GridError(DataError, ValueError):
    pass


class OutOfBoundsError(DataError, ValueError):
    """A coordinate falls outside the grid rectangle."""


class ParseError(DataError, ValueError):
    pass


class CoverageError(DataError, ValueError):
    pass


class UnknownVehicleError(CoverageError, KeyError):
    pass


class PlacementError(DataError, ValueError):
    pass


class GameError(DataError, ValueError):
    pass


class ModelFormatError(DataError, ValueError):
    """The persisted model file is truncated, foreign or of another version."""


class SolverError(SurvcamError, RuntimeError):
    pass


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass
