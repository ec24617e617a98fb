"""
Growth fits and pathwise bound-check verdicts.
"""
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class GrowthFit(BaseModel):
    """Least-squares slope of log(value) against log(1 + t) over a window."""

    model_config = ConfigDict(frozen=True)

    beta: float
    window: Tuple[float, float]
    residual: float = Field(..., ge=0.0, description="RMS residual of the log-log fit")
    series_name: str = "R"
    intercept: float = 0.0
    samples: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_window(self) -> "GrowthFit":
        if not self.window[0] < self.window[1]:
            raise ValueError(f"fit window must satisfy t_lo < t_hi, got {self.window}")
        return self


class BoundCheckReport(BaseModel):
    """Worst ratio of a pathwise differential inequality along a run."""

    name: str
    constant: float = Field(..., ge=0.0, description="constant the bound was checked with")
    max_ratio: float = Field(..., ge=0.0, description="max |lhs| / bound over records")
    worst_t: float
    slack: float
    records: int
    passed: bool


class ConservationReport(BaseModel):
    """Relative drift of conserved norms from their t = 0 values."""

    drifts: Dict[str, float]
    tol: float
    passed: bool


class MonotonicityReport(BaseModel):
    """Largest violations of the half-plane monotone quantities."""

    max_decrease_I_r2: float = Field(..., ge=0.0)
    max_increase_I_z: float = Field(..., ge=0.0)
    slack: float
    passed: bool


class GrowthTableRow(BaseModel):
    d: int
    predicted: str = Field(..., description="upper growth exponent of R(t), or 'exp'")
    fitted: Optional[float] = None
