"""Exception hierarchy shared across the package."""


class TsusyError(Exception):
    """Base class for all package errors."""


class DomainError(TsusyError, ValueError):
    """A time lies outside the declared domain of a mass profile."""


class ConfigError(TsusyError, ValueError):
    """Invalid user-supplied parameters or configuration."""


class PoleError(TsusyError, ArithmeticError):
    """Evaluation hit a pole (vanishing denominator)."""


class NumericalError(TsusyError, RuntimeError):
    """An integrator or quadrature failed to meet its tolerance."""


class ExtremeHierarchyError(NumericalError):
    """Scenario needs too many oscillation cycles to integrate directly.

    Use the closed forms in :mod:`tsusy.approx` and
    :func:`tsusy.oscillation.probability_closed_form` instead.
    """
