"""Exception hierarchy shared by all qforma modules."""


class QformaError(Exception):
    """Base class for every error raised by the package."""


class DomainError(QformaError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class SymmetryError(DomainError):
    pass


class DimensionError(DomainError):
    """Shapes are incompatible or exceed the configured dimension cap."""


class NotPositiveDefiniteError(DomainError):
    pass


class InfeasibleClassError(DomainError):
    """No member of the requested sparse matrix class can be generated."""


class InsufficientMomentsError(DomainError):
    """The component law lacks the finite moments the operation needs."""


class TooFewSamplesError(DomainError):
    pass


class DecompositionError(QformaError, ArithmeticError):
    """The eigensolver failed to converge or produced a bad residual."""


class MatrixFormatError(QformaError):
    """A matrix or data file could not be parsed."""
