"""Exception types shared across the package."""


class MatchnetError(Exception):
    """Base class for all package-specific errors."""


class InputError(MatchnetError, ValueError):
    """Invalid argument or malformed input data."""


class BoundNotApplicableError(MatchnetError):
    """A closed-form bound was requested outside its hypotheses."""


class UnsupportedModeError(MatchnetError):
    """The requested computation mode is unavailable for these inputs."""


class SizeLimitError(MatchnetError):
    """A state-space or iteration cap was exceeded."""


class NumericalError(MatchnetError):
    """A numeric solve failed to reach the required tolerance."""
