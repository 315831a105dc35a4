"""Exception and warning types shared across the package."""


class VolarrayError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(VolarrayError, ValueError):
    """An argument violates an operation's preconditions."""


class SingularMatrixError(VolarrayError):
    """A linear system is singular; typically fixed by regularizing (alpha > 0)."""


class MeasurementError(VolarrayError):
    """A pattern metric (beamwidth, sidelobe level) cannot be extracted."""


class ParseError(VolarrayError, ValueError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VolarrayWarning(UserWarning):
    """Base warning category."""


class PassivityWarning(VolarrayWarning):
    """S-parameter data violates passivity bounds."""


class TrialCountWarning(VolarrayWarning):
    """A Monte-Carlo estimate uses fewer trials than recommended."""


class ModelValidityWarning(VolarrayWarning):
    """An input is outside a model's stated validity range and was clamped."""
