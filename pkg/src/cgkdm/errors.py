"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CGKDMError`.
The CLI maps the two top-level families onto exit codes: :class:`DataError`
becomes exit 3 and :class:`NumericError` becomes exit 4.
"""


class CGKDMError(Exception):
    """Base class for package errors."""


class DataError(CGKDMError, ValueError):
    """Input data violates a precondition."""


class NumericError(CGKDMError, ArithmeticError):
    """A numerical routine could not deliver the requested accuracy."""


class InvalidInput(DataError):
    pass


class InvalidDims(InvalidInput):
    pass


class DimMismatch(InvalidInput):
    pass


class DimNot2(InvalidInput):
    pass


class TiesPresent(DataError):
    pass


class BudgetExceeded(CGKDMError, MemoryError):
    pass


class ZeroVariance(DataError):
    pass


class DegenerateSample(DataError):
    pass


class NotPSD(DataError):
    pass


class UnknownScenario(DataError, KeyError):
    pass


class SamplerRangeViolation(DataError):
    pass


class QuadratureFailure(NumericError):
    pass


class NonPositiveNormalizer(NumericError):
    pass


class NonPositiveMoment(NumericError):
    pass


class TruncationInsufficient(NumericError):
    pass
