"""
Velocity and energy results of the Biot-Savart service.
"""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class Velocity(BaseModel):
    """Meridian velocity (u^r, u^z) at a half-plane point."""

    model_config = ConfigDict(frozen=True)

    ur: float = Field(..., allow_inf_nan=False)
    uz: float = Field(..., allow_inf_nan=False)

    def __add__(self, other: "Velocity") -> "Velocity":
        return Velocity(ur=self.ur + other.ur, uz=self.uz + other.uz)

    @property
    def magnitude(self) -> float:
        return float((self.ur**2 + self.uz**2) ** 0.5)


class EnergyMethod(str, Enum):
    STREAM_DOUBLE_SUM = "stream_double_sum"
    GRID_QUADRATURE = "grid_quadrature"


class EnergyResult(BaseModel):
    """Energy norm ||u||_{L^2(R^d)} with the method used and a relative error estimate."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0.0)
    method: EnergyMethod
    est_error: float = Field(default=0.0, ge=0.0)
