"""
Time-integration configuration and per-step diagnostics.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from axivort.core.config import numerics
from axivort.models.field import check_dimension

DIAGNOSTIC_COLUMNS = (
    "t",
    "R",
    "omega_max",
    "relvort_L1",
    "relvort_Linf",
    "r_omega_L1",
    "energy",
    "I_r2",
    "I_z",
    "L",
    "max_ur",
)


class SimConfig(BaseModel):
    """Time-stepping parameters for one run."""

    model_config = ConfigDict(frozen=True)

    dt: Optional[float] = Field(
        default=None, gt=0.0, description="time step; omitted means CFL-chosen at t = 0"
    )
    t_end: float = Field(default=1.0, ge=0.0, description="final time")
    integrator: Literal["rk4", "rk2"] = "rk4"
    diag_every: int = Field(default=1, ge=1, description="steps between diagnostics")
    delta: Optional[float] = Field(
        default=None, ge=0.0, description="blob length override; omitted keeps the field's"
    )
    d: int = 3
    area_mode: Literal["volume", "fixed"] = "volume"
    probe_nz: int = Field(default=numerics.PROBE_NZ, ge=16)
    cfl: float = Field(default=numerics.CFL, gt=0.0)

    @field_validator("d")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        return check_dimension(v)


class DiagnosticsRecord(BaseModel):
    """Conserved, monotone and length-function quantities at one emitted step."""

    model_config = ConfigDict(frozen=True)

    t: float
    R: float = Field(..., ge=0.0)
    omega_max: float
    relvort_L1: float
    relvort_Linf: float
    r_omega_L1: float
    energy: float
    I_r2: float
    I_z: float
    L: float = Field(..., ge=1.0)
    max_ur: float
    # kept in memory beside the CSV columns
    ur_on_R: float = 0.0
    support_volume: float = 0.0

    def csv_row(self) -> List[float]:
        return [getattr(self, name) for name in DIAGNOSTIC_COLUMNS]


class ClaimBoundReport(BaseModel):
    """Worst ratios of the flow-map estimates for ||r omega||_1 and ||omega||_inf along a run."""

    max_ratio_r_omega: float = Field(
        ..., description="max ||r w(t)||_1 / ((||w0/r||_1 + ||r w0||_1) L^2)"
    )
    max_ratio_omega: float = Field(
        ..., description="max ||w(t)||_inf / ((||w0/r||_inf + ||w0||_inf) L)"
    )
    tol: float
    records: int
    passed: bool
