"""Exception types shared across the package."""


class KerrmagError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(KerrmagError, ValueError):
    """A scalar input is non-finite, out of range, or otherwise unusable."""


class UnsupportedOperationError(KerrmagError):
    """The requested derivation needs optional data that was not supplied."""


class ConfigError(KerrmagError):
    """Configuration file or override could not be parsed or validated."""


class ConvergenceError(KerrmagError):
    """Root finding failed from every starting point.

    Attributes
    ----------
    best_residual : float
        Smallest scaled residual reached by any iteration before giving up.
    """

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class DriftUnstableError(KerrmagError):
    """An operation that requires a Hurwitz-stable drift matrix got an unstable one."""


class SingularityError(KerrmagError, ZeroDivisionError):
    """A denominator or linear system is singular at the requested point."""


class DivergenceError(KerrmagError):
    """Time integration produced non-finite values (instability or too-large step)."""


class NumericalError(KerrmagError):
    """An internal numerical consistency check failed."""


class MultistabilityError(KerrmagError):
    """Multiple stable branches found while the branch policy forbids choosing.

    Attributes
    ----------
    coordinates : tuple or None
        Grid coordinates of the offending sweep point, if raised by the sweep
        engine.
    """

    def __init__(self, message, coordinates=None):
        super().__init__(message)
        self.coordinates = coordinates
