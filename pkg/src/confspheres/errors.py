"""Exception hierarchy shared by every module."""


class ConfSpheresError(Exception):
    """Base class for all errors raised by confspheres."""


class SingularPoint(ConfSpheresError, ValueError):
    """A point sits on (or too close to) the pole of an inversion or a field."""


class DimensionMismatch(ConfSpheresError, ValueError):
    pass


class DimensionTooSmall(ConfSpheresError, ValueError):
    pass


class OutOfDomain(ConfSpheresError, ValueError):
    pass


class NonPositiveValue(ConfSpheresError, ValueError):
    pass


class IndexOutOfRange(ConfSpheresError, IndexError):
    pass


class NoConvergence(ConfSpheresError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FitFailure(ConfSpheresError, ArithmeticError):
    pass


class LatticeMismatch(ConfSpheresError, ValueError):
    pass


class ConfigError(ConfSpheresError, ValueError):
    pass


class MonotonicityNotFound(ConfSpheresError, ArithmeticError):
    pass


class GridFormatError(ConfSpheresError, ValueError):
    """Malformed grid file. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
