"""
Exception hierarchy for the vortex engine and inequality harness.
"""
from typing import Any, List, Optional


class AxivortError(Exception):
    """Base class for every error raised by axivort."""


class DomainError(AxivortError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedDimensionError(DomainError):
    """The spatial dimension is not supported by the operation."""

    def __init__(self, d: int, allowed: str = "3..6"):
        self.d = d
        super().__init__(f"dimension d={d} is not supported (allowed: {allowed})")


class KernelConvergenceError(AxivortError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved_tolerance: float):
        self.achieved_tolerance = achieved_tolerance
        super().__init__(f"{message} (achieved tolerance {achieved_tolerance:.3e})")


class KernelTableError(AxivortError):
    """A memoized kernel table disagrees with direct quadrature."""


class SingularityError(AxivortError):
    """A kernel was evaluated at a singular configuration."""


class NegativeEnergyError(AxivortError):
    """The discrete energy double sum came out negative."""

    def __init__(self, value: float):
        self.value = value
        super().__init__(f"stream double sum returned a negative squared energy: {value:.17g}")


class RankDeficientSystemError(AxivortError):
    """An exponent system does not determine a unique solution."""

    def __init__(self, rank: int, unknowns: int):
        self.rank = rank
        self.unknowns = unknowns
        super().__init__(
            f"constraint system is rank deficient: rank {rank} for {unknowns} unknowns"
        )


class InconsistentSystemError(AxivortError):
    """An exponent system has no solution."""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"constraint system is inconsistent at constraint '{label}'")


class InsufficientSamplesError(DomainError):
    """A series is too short for the requested post-processing."""


class SimulationAbortedError(AxivortError):
    """A time integration produced non-finite velocities."""

    def __init__(self, message: str, records: Optional[List[Any]] = None):
        self.records = records or []
        super().__init__(message)


class ConfigurationError(AxivortError):
    """A run configuration could not be loaded or validated."""
