"""Exception types raised by the library.

Validation problems (bad input, malformed files) derive from ``ValidationError``;
numerical breakdowns derive from ``NumericalError``.  The CLI maps the two
families onto exit codes 2 and 3.
"""


class QzsgError(Exception):
    """Base class for every error raised by qzsg."""


class ValidationError(QzsgError, ValueError):
    pass


class NumericalError(QzsgError, ArithmeticError):
    pass


class DimensionMismatch(ValidationError):
    pass


class HermiticityError(ValidationError):
    pass


class NotDensityMatrix(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class ReferenceNotFullyMixed(ValidationError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SupportViolation(NumericalError):
    """Relative entropy would be infinite (support of rho not inside support of sigma)."""


class EigensolverError(NumericalError):
    pass
