"""Exception hierarchy shared by every module of the package."""


class DrpalpError(Exception):
    """Base class for all package errors."""


class ConfigError(DrpalpError, ValueError):
    """Invalid scenario, trajectory or estimator configuration."""


class DomainError(DrpalpError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SingularMaterialError(DomainError):
    """Poisson ratio of exactly one makes the effective modulus infinite."""


class UnsupportedProfileError(DrpalpError, TypeError):
    """The operation is only defined for a subset of indenter profiles."""


class UnsupportedCalibrationError(DomainError):
    """A calibration constant was requested outside its calibrated point."""


class NumericalError(DrpalpError, ArithmeticError):
    """A numerical procedure failed (ill-posed data, no convergence, ...)."""


class NoContactError(NumericalError):
    """The data never shows the indenter entering the specimen."""


class IllPosedError(NumericalError):
    """The data cannot identify the requested parameters."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped before converging.

    ``best`` holds the best iterate found, when one exists.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateDataError(DomainError):
    """The data carry no variation, so the requested statistic is undefined."""
