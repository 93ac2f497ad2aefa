"""Exception types shared across the package."""


class PcveilError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(PcveilError, ValueError):
    """A parameter is outside its legal range or otherwise malformed."""


class ExcludedKindError(InvalidParameterError):
    """A transformation family that is banned from class-wise protection."""


class SingularTransformError(PcveilError):
    """A transformation cannot be applied or inverted on the given points."""


class CoverageError(PcveilError):
    """The dataset references a class the protection message does not cover."""


class ParseError(PcveilError):
    """A text artifact failed to parse.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
