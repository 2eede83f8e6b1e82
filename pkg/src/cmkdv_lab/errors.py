"""Exception hierarchy shared by the lab modules."""


class LabError(Exception):
    """Base class for every error raised by cmkdv_lab."""


class ConfigurationError(LabError, ValueError):
    """Invalid input shapes, grids or run configuration."""


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ProfileBlowupError(LabError):
    """Shooting from the Airy tail left the bounded-solution basin."""

    def __init__(self, message, c=None, y=None):
        super().__init__(message)
        self.c = c
        self.y = y


class CalibrationError(LabError):
    """Secant calibration of the profile amplitude failed."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class CoverageError(LabError):
    """Requested samples fall outside the computed profile mesh."""


class AccuracyError(LabError):
    """A quadrature or extrapolation did not reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BlowupError(LabError):
    """Time integration produced non-finite or runaway values."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class RegimeError(LabError, ValueError):
    """Formula evaluated outside the frequency regime it is valid in."""


class ResolutionError(LabError):
    """The grid does not resolve the frequencies a diagnostic needs."""
