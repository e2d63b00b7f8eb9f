"""Exception and warning types shared across the package.

Everything derives from :class:`EgregError` (itself a ``ValueError``) so
callers can catch package errors with a single except clause while standard
``ValueError`` handling keeps working.
"""


class EgregError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(EgregError):
    """A dimension argument or array shape is out of range or inconsistent."""


class DegenerateColumnError(EgregError):
    """A column is constant where variation is required (standardization)."""


class ContractError(EgregError):
    """An input violates a documented precondition (e.g. uncentered data)."""


class ParameterError(EgregError):
    """A scalar or grid parameter lies outside its valid range."""


class DomainError(EgregError):
    """A numeric argument lies outside the mathematical domain of a function."""


class SingularityError(EgregError):
    """The requested quantity diverges at the given parameter value."""


class RankZeroError(EgregError):
    """The input matrix has numerical rank zero."""


class ConfigError(EgregError):
    """A study or run configuration is malformed or infeasible."""


class ParseError(EgregError):
    """A data or model file could not be parsed."""


class DegeneracyWarning(UserWarning):
    """A degenerate but recoverable situation (ties, zero scores, ...)."""
