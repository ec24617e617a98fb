"""
Kernel descriptors and decay-bound reports.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from axivort.core.config import numerics
from axivort.models.field import check_dimension


class KernelSpec(BaseModel):
    """Selects F_(d)^(ell): dimension d, derivative order ell and quadrature tolerance."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(..., description="spatial dimension")
    ell: int = Field(default=0, ge=0, description="derivative order")
    quad_rel_tol: float = Field(default=numerics.QUAD_REL_TOL, gt=0.0, lt=1e-3)

    @field_validator("d")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        return check_dimension(v)


class KernelBoundReport(BaseModel):
    """Empirical constant of |F^(ell)(s)| against its decay comparator on a grid."""

    spec: KernelSpec
    s_grid: List[float]
    empirical_constant: float = Field(..., gt=0.0)
    worst_s: float = Field(..., gt=0.0)
    comparator: Literal["power", "log"] = "power"
    oracle_deviation: Optional[float] = Field(
        default=None,
        description="max relative deviation from the closed form where one exists (d in {3, 4})",
    )

    @model_validator(mode="after")
    def validate_grid(self) -> "KernelBoundReport":
        grid = self.s_grid
        if any(s <= 0.0 for s in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("s_grid must be strictly increasing and positive")
        return self
