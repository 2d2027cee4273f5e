from typing import Any, Optional


class FreeminError(Exception):
    """Base class for all errors raised by the solver and the experiment harness"""


class ConfigError(FreeminError, ValueError):
    """Invalid experiment configuration (syntax or validation)"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(FreeminError, ValueError):
    """A vector or parameter lies outside the domain an operation is defined on"""


class SolverError(FreeminError, RuntimeError):
    """The descent iteration could not continue"""

    def __init__(self, message: str, state: Optional[Any] = None):
        # Last good IterateState, kept for diagnostics
        self.state = state
        super().__init__(message)


class NormalizationError(SolverError):
    """The Lagrange constant c could not be determined"""
