"""Exception hierarchy shared by every mvseg module."""


class MvsegError(Exception):
    """Base class for all mvseg errors."""


class InvalidArgumentError(MvsegError, ValueError):
    pass


class NumericalError(MvsegError, ArithmeticError):
    pass


class NumericalBlowupError(NumericalError):
    """Raised when a level-set evolution produces non-finite values."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class CutLocusError(MvsegError, ValueError):
    """Log map requested for a point pair where it is undefined.

    ``index`` is the flat index of the first offending pair when the call was
    batched, ``iteration`` is filled in by iterative callers.
    """

    def __init__(self, message, index=None, iteration=None):
        super().__init__(message)
        self.index = index
        self.iteration = iteration


class NonConvergenceError(MvsegError, RuntimeError):
    """An iterative solver hit its iteration cap; ``last`` holds the last iterate."""

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class FormatError(MvsegError, ValueError):
    pass


class BadMagicError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class PixelInvariantError(FormatError):
    """A decoded pixel is not a valid point of the declared manifold."""

    def __init__(self, message, pixel=None):
        super().__init__(message)
        self.pixel = pixel
