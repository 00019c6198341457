"""Exception types raised across the package."""


class PmodError(Exception):
    """Base class for all package errors."""


class NotFullyPolarized(PmodError, ValueError):
    pass


class ZeroIntensity(PmodError, ValueError):
    pass


class UnsupportedOrder(PmodError, ValueError):
    pass


class ParseError(PmodError, ValueError):
    pass


class NonUnitPoint(PmodError, ValueError):
    pass


class LabelNotFound(PmodError, KeyError):
    pass


class LengthMismatch(PmodError, ValueError):
    pass


class SingularFilter(PmodError, ArithmeticError):
    pass


class QuadratureNotConverged(PmodError, ArithmeticError):
    pass


class MissingPacking(PmodError, LookupError):
    pass
