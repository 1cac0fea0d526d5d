"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: parameter-family errors exit 2,
regime errors exit 3, consistency errors exit 4.
"""


class McvqkdError(Exception):
    """Base class for all library errors."""


class ParameterError(McvqkdError, ValueError):
    """An argument is outside its documented range."""


class DomainError(ParameterError):
    """A formula is evaluated where it is undefined or unphysical."""


class StateError(ParameterError):
    """An object is in a state that does not support the request (e.g. no selected slots)."""


class DataError(ParameterError):
    """Supplied statistics are inconsistent (e.g. violate Cauchy-Schwarz)."""


class ConfigurationError(ParameterError):
    """A configuration is incomplete, ambiguous, or fails schema validation."""


class RegimeError(McvqkdError):
    """Inputs fall outside the large-modulation regime the asymptotic spectra assume."""


class ConsistencyError(McvqkdError):
    """An internal invariant failed, such as a covariance matrix that is not PSD."""


class RegimeWarning(UserWarning):
    """Inputs are inside the regime but close enough to its edge to be suspect."""
