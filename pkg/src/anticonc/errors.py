"""Exception hierarchy shared by all modules."""


class AnticoncError(Exception):
    """Base class for every error raised by this package."""


class InvalidMeasureError(AnticoncError, ValueError):
    pass


class DimensionError(AnticoncError, ValueError):
    pass


class InvalidInputError(AnticoncError, ValueError):
    pass


class InsufficientSamplesError(AnticoncError, ValueError):
    pass


class InstanceTooLargeError(AnticoncError, ValueError):
    pass


class TooManyGeneratorsError(InstanceTooLargeError):
    pass


class EmptySubmeasureError(AnticoncError, ValueError):
    """Raised when a sub-measure V = f*G has zero total mass."""


class ZeroTailError(AnticoncError, ValueError):
    """Raised when G{|z| >= delta} = 0, so no threshold bound exists."""


class DegenerateLawError(AnticoncError, ValueError):
    """Raised when G is concentrated at zero."""


class UnconvergedError(AnticoncError, RuntimeError):
    """Quadrature hit its refinement limit.

    The best available estimate is kept on ``best_estimate`` so callers can
    still report it.
    """

    def __init__(self, message, best_estimate, last_change=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.last_change = last_change
