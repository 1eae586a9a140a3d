"""Exception hierarchy.

Every error raised by the package derives from :class:`RRRError` and from the
closest builtin (``ValueError`` or ``ArithmeticError``) so callers that only
know the builtins still catch them.
"""


class RRRError(Exception):
    """Base class for all package errors."""


class DimensionError(RRRError, ValueError):
    """Nonpositive or nonconformable matrix dimensions."""


class RankError(RRRError, ValueError):
    """Requested signal rank is incompatible with the matrix shape."""


class RegimeError(RRRError, ValueError):
    """Model dimensions fall outside the supported asymptotic regime."""


class ParameterError(RRRError, ValueError):
    """Invalid scalar parameter."""


class DomainError(RRRError, ValueError):
    """Function evaluated outside its domain of definition."""


class SingularDesignError(RRRError, ArithmeticError):
    """Design matrix is numerically rank deficient."""


class NumericError(RRRError, ArithmeticError):
    """Non-finite input or output."""


class PoleError(DomainError):
    """Evaluation point collides with a pole of a secular function."""


class NoRootError(RRRError, ArithmeticError):
    """A root-finding problem has no admissible solution."""


class AggregationError(RRRError, ValueError):
    """Records from incompatible experiments were mixed."""
