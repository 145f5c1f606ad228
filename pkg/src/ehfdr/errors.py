"""Exception hierarchy shared by every module."""


class EhfdrError(Exception):
    """Base class for all package errors."""


class DomainError(EhfdrError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(EhfdrError, RuntimeError):
    """An iterative method ran out of budget before meeting its tolerance.

    The best available estimate is kept on ``estimate`` (and its error on
    ``error_estimate``) so callers can decide whether to use it.
    """

    def __init__(self, message, estimate=float("nan"), error_estimate=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


class SingularIntegrandError(ConvergenceError):
    """The integrand hit a pole inside the integration range."""


class OscillationError(EhfdrError, ValueError):
    """Relay gain large enough that the self-interference loop diverges."""


class DegenerateChannelError(EhfdrError, ValueError):
    """A channel with zero SNR on a hop where the scheme needs it positive."""


class ContractError(EhfdrError, ValueError):
    """Incompatible combination of options, such as a fixed TS factor with an
    instantaneous-CSI scheme."""


class ConfigError(EhfdrError, ValueError):
    """A configuration file or override could not be parsed or validated."""
