"""
Exceptions raised by the resonant collision library
"""
from typing import Any, Dict, Optional


class ResonantError(Exception):
    """Base class for every error raised by the library"""
    pass


class DomainError(ResonantError, ValueError):
    """Argument lies outside the mathematical domain of the operation"""
    pass


class ArgumentError(ResonantError, ValueError):
    """Malformed argument (empty grid, non-unit direction, bad shape)"""
    pass


class DegenerateConfigurationError(ResonantError):
    """Measure-zero configuration excluded by a change of variables"""
    pass


class SingularityError(ResonantError):
    """Evaluation requested exactly at a kernel singularity"""
    pass


class SamplingError(ResonantError):
    """Rejection sampler exhausted its attempt budget"""
    pass


class AssemblyError(ResonantError):
    """Too many Galerkin entries could not be computed"""
    pass


class ConfigurationError(ResonantError):
    """Run configuration is missing or invalid"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class ConvergenceError(ResonantError):
    """Quadrature or refinement did not reach the requested tolerance"""

    def __init__(self, message: str, last_estimate: float = float('nan'),
                 diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.diagnostics = diagnostics or {}
