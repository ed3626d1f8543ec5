"""Error hierarchy.

Bad input raises a ``ValueError`` subclass (the CLI maps these to exit code 2),
numerical breakdown raises a ``NumericalError`` (exit code 3).
"""
from typing import Optional


class DomainError(ValueError):
    """Argument outside the domain of an operation (coincident points, s outside (0,1), ...)."""


class EllipticityError(ValueError):
    """Quadratic form of an anisotropy field is not positive."""


class InputError(ValueError):
    pass


class CapacityError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class NumericalError(RuntimeError):
    pass


class SolverError(NumericalError):
    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message if condition is None else f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class IterationError(NumericalError):
    def __init__(self, message: str, last_residual: Optional[float] = None):
        super().__init__(message if last_residual is None else f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class PositivityError(NumericalError):
    pass


class OptimizationError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class OracleInconsistencyError(NumericalError):
    pass


class ReconstructionError(NumericalError):
    pass
