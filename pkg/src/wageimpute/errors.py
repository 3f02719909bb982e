"""Exception types raised across the package."""


class WageImputeError(Exception):
    """Base class for all package errors."""


class EmptyInput(WageImputeError, ValueError):
    pass


class NoEmployees(WageImputeError, ValueError):
    pass


class ZeroEmployees(WageImputeError, ValueError):
    pass


class InvalidFraction(WageImputeError, ValueError):
    pass


class InvalidPropensity(WageImputeError, ValueError):
    pass


class EmptyDomain(WageImputeError, ValueError):
    pass


class NumericOverflow(WageImputeError, FloatingPointError):
    pass


class SingularDesign(WageImputeError, ArithmeticError):
    """Design matrix (or information matrix) is not of full rank."""


class Nonconvergence(WageImputeError, ArithmeticError):
    """Newton iteration failed to converge.

    ``diagnostics`` carries the loglik trace, last gradient norm and
    coefficient path so callers can report why.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ModelUnavailable(WageImputeError, KeyError):
    def __init__(self, soc):
        super().__init__(soc)
        self.soc = soc

    def __str__(self):
        return f"no fitted model for occupation {self.soc!r}"


class NoDonors(WageImputeError, LookupError):
    pass


class NoResults(WageImputeError, RuntimeError):
    pass


class ConfigError(WageImputeError, ValueError):
    pass
