"""Exception hierarchy.

Data problems derive from :class:`DataError`, numerical failures from
:class:`NumericalError`; the CLI maps these onto distinct exit codes.
"""


class CvmError(Exception):
    """Base class for every error raised by the package."""


class DataError(CvmError, ValueError):
    pass


class NonFinite(DataError):
    pass


class TooShort(DataError):
    pass


class TiesPresent(DataError):
    def __init__(self, message, n_tied=0):
        super().__init__(message)
        self.n_tied = n_tied


class DegenerateSample(DataError):
    pass


class SplitOutOfRange(CvmError, IndexError):
    pass


class IndexOutOfRange(CvmError, ValueError):
    pass


class DomainError(CvmError, ValueError):
    pass


class UnsupportedCombination(CvmError, ValueError):
    pass


class UnsupportedFamily(CvmError, ValueError):
    pass


class InsufficientReps(CvmError, ValueError):
    pass


class NumericalError(CvmError, ArithmeticError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass
