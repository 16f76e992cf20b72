"""
Domain errors raised across the simulator.

Diagnostics (acceptance rates, kept singular values, skip counters) are
reported through result objects; only contract breaks end up here.
"""
from typing import Any, Dict, Optional


class NtfsError(Exception):
    """Base class for every simulator error."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvalidGeometryError(NtfsError, ValueError):
    pass


class ContractViolation(NtfsError, ValueError):
    pass


class BasisMismatchError(NtfsError, ValueError):
    pass


class DomainError(NtfsError, ValueError):
    """Evaluation at an exact zero of the wave function."""


class CapacityError(NtfsError, ValueError):
    pass


class SeedingError(NtfsError, RuntimeError):
    pass


class EvolutionError(NtfsError, RuntimeError):
    pass


class StepRejected(EvolutionError):
    pass


class PiteConvergenceError(EvolutionError):
    pass


class SchemaError(NtfsError, ValueError):
    pass


class OracleError(NtfsError, RuntimeError):
    pass
