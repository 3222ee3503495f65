"""Exception hierarchy shared by the numerical modules and the CLI."""


class SchurSSError(Exception):
    """Base class for all library errors."""


class DimensionError(SchurSSError, ValueError):
    """Operand shapes are incompatible with the operation."""


class PreconditionError(SchurSSError, ValueError):
    """Input violates a documented precondition (e.g. asymmetric matrix)."""


class StructureError(SchurSSError, ValueError):
    """A block-pattern vector is inconsistent with the matrix it describes."""


class DomainError(SchurSSError, ValueError):
    """A quantity is undefined for the given input (e.g. division by zero norm)."""


class SingularityError(SchurSSError, ArithmeticError):
    """A matrix that must be invertible / full rank is not."""


class ConvergenceError(SchurSSError, ArithmeticError):
    """An iterative method exhausted its iteration budget.

    ``partial`` holds whatever intermediate result the method had reached and
    ``info`` carries method-specific diagnostics (residuals, active size, ...).
    """

    def __init__(self, message, partial=None, **info):
        super().__init__(message)
        self.partial = partial
        self.info = info


class DivergenceError(SchurSSError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, method=None, msvr=None):
        super().__init__(message)
        self.epoch = epoch
        self.method = method
        self.msvr = msvr
