"""Exception types shared across the package."""


class StrobocatError(Exception):
    """Base class for all errors raised by this package."""


class TruncationError(StrobocatError):
    """The Fock-space truncation is too small for the requested amplitude."""


class DimensionError(StrobocatError):
    """Operator/state dimensions are incompatible or over the supported cap."""


class ScheduleOverlapError(StrobocatError):
    """Two finite-duration schedule events overlap in time."""


class ConvergenceError(StrobocatError):
    """An iterative integrator failed to reach its tolerance."""


class ParseError(StrobocatError):
    """Config text is syntactically malformed.

    Carries the 1-based line and column of the offending character.
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(StrobocatError):
    """Config is well-formed but semantically invalid; names the field."""

    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IoError(StrobocatError):
    """Reading the config or writing the output file failed."""
