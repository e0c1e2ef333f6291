"""Exception hierarchy shared by all modules."""


class L1RecoverError(Exception):
    """Base class for every error raised by this package."""


class InvalidShape(L1RecoverError, ValueError):
    pass


class ShapeMismatch(L1RecoverError, ValueError):
    pass


class IndexOutOfRange(L1RecoverError, IndexError):
    pass


class NotSymmetric(L1RecoverError, ValueError):
    pass


class NotPositiveDefinite(L1RecoverError, ArithmeticError):
    pass


class DegenerateDraw(L1RecoverError, RuntimeError):
    """A random draw stayed degenerate after the allowed number of retries."""


class InconsistentConstraints(L1RecoverError, ValueError):
    """The measurement vector is not in the column space of the operator."""


class SingularGram(L1RecoverError, ArithmeticError):
    """Gram matrix of the selected columns is numerically singular."""


class EmptySupport(L1RecoverError, ValueError):
    pass


class EmptyComplement(L1RecoverError, ValueError):
    pass


class UsageError(L1RecoverError):
    """Bad command-line or config-file input. Maps to exit status 2."""
