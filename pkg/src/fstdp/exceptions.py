"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`FSTDPError`,
so callers (the CLI in particular) can separate expected failures from bugs.
"""


class FSTDPError(Exception):
    """Base class for all library errors."""


class InvalidInputError(FSTDPError, ValueError):
    """An argument is outside its documented domain."""


class DimensionError(InvalidInputError):
    """Array or channel counts do not agree."""


class InvalidSpecError(InvalidInputError):
    """A process or experiment description cannot be realised."""


class UndefinedCorrelationError(InvalidInputError):
    """Pearson correlation requested for a zero-variance channel."""


class CalibrationError(FSTDPError):
    """Threshold bisection could not reach the requested output rate."""

    def __init__(self, message, achieved_range=None):
        super().__init__(message)
        self.achieved_range = achieved_range


class DegenerateConditionError(FSTDPError):
    """Learning condition undefined (no correlated causal probability)."""


class ParseError(FSTDPError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConflictError(ParseError):
    """Duplicate key in an input file."""


class ValidationError(InvalidInputError):
    """Config validation failure; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
