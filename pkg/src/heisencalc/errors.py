class HeisencalcError(Exception):
    """
    Base class of every error raised by heisencalc.
    """


class DimensionMismatchError(HeisencalcError, ValueError):
    pass


class DomainError(HeisencalcError, ValueError):
    """
    An argument lies outside the domain of the operation (a <= 0, p < 1, t <= 0, ...).
    """


class CapExceededError(HeisencalcError, ValueError):
    pass


class GridError(HeisencalcError, ValueError):
    """
    Grids disagree, are too small, or cannot resolve the requested quantity.
    """


class SupportError(HeisencalcError, ValueError):
    """
    A spectral profile has mass where the operation requires it to vanish.
    """


class TruncationError(HeisencalcError, ArithmeticError):
    """
    A neglected tail (series, integral, quadrature boundary) exceeds its tolerance.
    """


class StabilityError(HeisencalcError, ArithmeticError):
    pass


class FitError(HeisencalcError, ArithmeticError):
    pass


class ConfigError(HeisencalcError, ValueError):
    pass
