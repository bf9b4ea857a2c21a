"""Exception hierarchy shared by every module."""


class BsqError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(BsqError, ValueError):
    """Arrays or fields live on incompatible grids or have the wrong rank."""


class ConfigurationError(BsqError, ValueError):
    """A grid, truncation radius or run configuration is invalid."""


class ParameterError(BsqError, ValueError):
    """A numeric argument is outside its admissible range."""


class ReportError(BsqError):
    """A diagnostics trajectory lacks the fields a report needs."""


class NotApplicableError(BsqError):
    """The requested check does not apply to this system."""


class BlowupSignal(BsqError):
    """Raised when the evolving state stops being finite or exceeds the ceiling.

    Carries the time at which it happened and the last good diagnostics.
    """

    def __init__(self, message, t, last_record=None):
        super().__init__(message)
        self.t = t
        self.last_record = last_record
