"""Exception hierarchy shared by every module."""


class LisceError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(LisceError, ValueError):
    pass


class DimensionError(LisceError, ValueError):
    pass


class SingularMatrixError(LisceError, ArithmeticError):
    """Raised when a system is too close to singular to solve reliably."""

    def __init__(self, message, det=None):
        super().__init__(message)
        self.det = det


class IncompleteDataError(LisceError):
    """Raised when a results table lacks rows needed for a comparison."""


class ConfigError(LisceError):
    """Malformed experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
