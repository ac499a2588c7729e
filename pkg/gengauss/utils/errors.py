"""Exception hierarchy; each class knows the CLI exit code it maps to."""


class GenGaussError(Exception):
    exit_code = 1
    code = "gengauss_error"


class DomainError(GenGaussError, ValueError):
    """A precondition on the inputs does not hold."""
    exit_code = 2
    code = "domain_error"


class CapacityError(DomainError):
    """More recurrence coefficients were requested than the measure can supply."""
    code = "capacity_error"


class UnsupportedError(DomainError):
    code = "unsupported"


class ExprSyntaxError(DomainError):

    code = "syntax_error"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class NumericError(GenGaussError, ArithmeticError):
    """Numerical breakdown; raising the precision mode may help."""
    exit_code = 3
    code = "numeric_error"


class OutputError(GenGaussError, OSError):
    exit_code = 4
    code = "io_error"
