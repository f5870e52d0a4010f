"""Exception types raised across the package."""


class RecenteringError(Exception):
    """Base class for all package errors."""


class InputError(RecenteringError, ValueError):
    """A precondition on the arguments was violated."""


class KernelEvaluationError(RecenteringError, ArithmeticError):
    """A kernel produced a non-finite value."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NumericalError(RecenteringError, ArithmeticError):
    """An eigen-solver or quadrature failed; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TruncationError(NumericalError):
    """A state leaked into the top levels of a truncated oscillator basis."""


class DivergenceError(NumericalError):
    """An integration produced a non-finite state."""


class ConvergenceError(NumericalError):
    """An iterative solver ran out of iterations."""


class InadmissibleError(InputError):
    """Ultralocal data violate a representation condition."""
