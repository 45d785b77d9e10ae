"""Exception types.

Argument and configuration problems raise plain ``ValueError``; numeric
failures raise subclasses of :class:`NumericError`.
"""


class NumericError(RuntimeError):
    """An oracle, optimizer or estimator could not produce a trustworthy value."""


class ConvergenceError(NumericError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateError(NumericError):
    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class UnsupportedError(NumericError):
    """The requested route does not exist for this subject (e.g. dimension caps)."""
