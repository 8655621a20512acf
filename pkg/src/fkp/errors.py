"""Exception types shared across the package."""


class FKPError(Exception):
    """Base class for all package errors."""


class PreconditionError(FKPError, ValueError):
    """An operation was called outside its admissible parameter range."""


class ConstraintViolation(FKPError):
    """Data carries energy on the ``xi = 0`` line where a singular multiplier acts."""


class BlowUpError(FKPError):
    """A time integration produced non-finite values.

    The partial outputs collected before the failure are kept on the
    exception so callers can still write them out.
    """

    def __init__(self, message, time, snapshots=None, diagnostics=None):
        super().__init__(message)
        self.time = time
        self.snapshots = snapshots if snapshots is not None else []
        self.diagnostics = diagnostics


class CFLViolation(BlowUpError):
    """The nonlinear transport bound ``max|u| * max|xi| * dt <= 1`` was violated."""
