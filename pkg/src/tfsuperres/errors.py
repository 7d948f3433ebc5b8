"""Exception hierarchy.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical problems with 3.
"""


class TFSuperresError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(TFSuperresError, ValueError):
    """Invalid or inconsistent configuration."""


class NumericalError(TFSuperresError, ArithmeticError):
    """Base class for failures during a numerical computation."""


class DomainError(NumericalError, ValueError):
    """An argument lies outside the domain of the function."""


class UnsupportedOrderError(DomainError):
    """Hermite-Gauss order above the configured cap."""


class QuadratureError(NumericalError):
    """The integration grid does not capture the integrand to the required accuracy."""


class UnderdeterminedError(NumericalError):
    """Fewer calibration points than basis functions."""


class SingularCalibrationError(NumericalError):
    """Calibration design matrix is rank deficient."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class ExtrapolationError(DomainError):
    """Separation outside the calibrated range."""


class InsufficientDataError(NumericalError):
    """No detection events to estimate from."""
