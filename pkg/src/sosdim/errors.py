"""Exception hierarchy shared by all sosdim modules."""


class SosdimError(Exception):
    """Base class for every error raised by sosdim."""


class InvalidInputError(SosdimError, ValueError):
    pass


class InvalidLagError(InvalidInputError):
    pass


class InvalidDimensionError(InvalidInputError):
    pass


class InvalidModelError(InvalidInputError):
    pass


class ParseError(InvalidInputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormatError(InvalidInputError):
    pass


class NumericalError(SosdimError, ArithmeticError):
    """Failures of the numerical pipeline (exit code 3 in the CLI)."""


class SingularCovarianceError(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    """Jacobi sweeps hit the limit before every rotation angle fell below tol.

    The last iterate is attached so that callers may decide to accept it.
    """

    def __init__(self, message, off_diagonal=float("nan"), rotation=None, sweeps=0):
        super().__init__(message)
        self.off_diagonal = off_diagonal
        self.rotation = rotation
        self.sweeps = sweeps


class ReportIOError(SosdimError, OSError):
    pass
