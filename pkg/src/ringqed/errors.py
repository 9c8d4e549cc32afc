"""Exception types shared across the package."""


class RingqedError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RingqedError):
    """A parameter, grid, or configuration value violates its documented range."""


class ConfigError(ValidationError):
    """A run configuration file or override could not be parsed or validated."""


class DegenerateFieldError(RingqedError):
    """The electric field at a point is too weak to define a helicity basis."""


class GridError(RingqedError):
    """A field-grid file or table is structurally malformed."""


class SingularSystemError(RingqedError):
    """A steady-state coefficient matrix is numerically singular."""


class ConstraintError(RingqedError):
    """Closed-form isolation conditions were requested outside their validity range."""


class NoDipError(RingqedError):
    """No interior transmission minimum could be bracketed."""


class ContinuationError(RingqedError):
    """Zero-backward-transmission tracing failed at one or more samples.

    Carries the samples that failed and any points that were traced
    successfully, so callers can inspect partial results.
    """

    def __init__(self, message, failed_kappa_ex=(), points=()):
        super().__init__(message)
        self.failed_kappa_ex = list(failed_kappa_ex)
        self.points = list(points)


class TruncationError(RingqedError):
    """Requested Hilbert-space truncation is outside the supported range."""


class SteadyStateError(RingqedError):
    """A master-equation steady state could not be computed reliably."""


class NonUniqueSteadyStateError(SteadyStateError):
    """The Liouvillian null space has dimension greater than one."""

    def __init__(self, message, null_dimension=None):
        super().__init__(message)
        self.null_dimension = null_dimension
