"""Exception types raised across the package."""


class WavebreakError(Exception):
    """Base class for all package errors."""


class InvalidArgument(WavebreakError, ValueError):
    pass


class OutOfRange(InvalidArgument):
    """A parameter lies outside the range where a formula is valid."""


class InsufficientData(WavebreakError):
    pass


class QuadratureFailure(WavebreakError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CorruptedState(WavebreakError):
    """Non-finite values showed up in a field."""


class UnderResolved(WavebreakError):
    """The initial spectrum does not decay fast enough for the grid."""


class StepFailure(WavebreakError):
    """The requested time step fell below the configured floor."""

    def __init__(self, message, dt=None):
        super().__init__(message)
        self.dt = dt


class NoNegativeSlope(WavebreakError):
    """The datum has inf u' >= 0, so there is nothing to break."""
