"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary domain errors (bad argument
ranges, malformed configs get the ``ConfigError`` subclass so the CLI can
report the offending field).  ``OverflowError`` is raised, never swallowed,
when an intermediate quantity leaves the representable range.
"""


class PrecisionLossError(ArithmeticError):
    """A result would lose too many significant digits to cancellation.

    Raised instead of returning a silently degraded value.  Callers that
    can tolerate lower accuracy may fall back to a quadrature oracle.
    """


class BracketingError(RuntimeError):
    """A bracketed root search failed to straddle its target."""


class ConfigError(ValueError):
    """A scenario configuration document failed validation.

    The message names the offending field.
    """
