"""
Discrete axisymmetric vorticity on the half-plane {(r, z) : r >= 0}.
"""
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from axivort.core.config import numerics
from axivort.utils.exceptions import DomainError, UnsupportedDimensionError

SUPPORTED_DIMENSIONS = (3, 4, 5, 6)


def sphere_measure(d: int) -> float:
    """Area of the unit sphere S^{d-2}, the angular factor of the measure sigma r^{d-2} dr dz."""
    return 2.0 * math.pi ** ((d - 1) / 2.0) / math.gamma((d - 1) / 2.0)


def check_dimension(d: int) -> int:
    if d not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimensionError(d)
    return d


class HalfPlanePoint(BaseModel):
    """A point (r, z) of the meridian half-plane."""

    model_config = ConfigDict(frozen=True)

    r: float = Field(..., ge=0.0, description="radial coordinate (length)")
    z: float = Field(..., description="axial coordinate (length)")


class VortexElement(BaseModel):
    """Lagrangian carrier of the transported scalar q = omega / r^(d-2)."""

    model_config = ConfigDict(frozen=True)

    pos: HalfPlanePoint
    q: float = Field(..., allow_inf_nan=False, description="relative vorticity")
    area: float = Field(..., gt=0.0, description="cell area dr dz (length^2)")


class DipoleParams(BaseModel):
    """Initial data -phi(r, z) + phi(r, -z): two anti-parallel rings."""

    model_config = ConfigDict(frozen=True)

    center: HalfPlanePoint = Field(
        default_factory=lambda: HalfPlanePoint(
            r=numerics.DIPOLE_CENTER_R, z=numerics.DIPOLE_CENTER_Z
        )
    )
    radius: float = Field(default=numerics.DIPOLE_RADIUS, gt=0.0)
    amplitude: float = Field(default=numerics.DIPOLE_AMPLITUDE, gt=0.0)
    resolution: int = Field(default=24, description="cells per bump diameter")
    d: int = 3
    delta: Optional[float] = Field(
        default=None, ge=0.0, description="blob length; defaults to 1.5 cell sizes"
    )

    @field_validator("d")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        return check_dimension(v)

    @model_validator(mode="after")
    def validate_geometry(self) -> "DipoleParams":
        if self.center.z <= self.radius:
            raise ValueError("bump must not straddle z = 0 (center.z > radius)")
        if self.center.r <= self.radius:
            raise ValueError("bump support must stay off the axis (center.r > radius)")
        return self


class RingParams(BaseModel):
    """A single signed vortex ring with bump cross-section."""

    model_config = ConfigDict(frozen=True)

    center: HalfPlanePoint = Field(default_factory=lambda: HalfPlanePoint(r=1.0, z=0.0))
    radius: float = Field(default=0.1, gt=0.0)
    amplitude: float = Field(default=1.0)
    resolution: int = 8
    d: int = 3
    delta: Optional[float] = Field(default=None, ge=0.0)

    @field_validator("d")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        return check_dimension(v)

    @model_validator(mode="after")
    def validate_geometry(self) -> "RingParams":
        if self.center.r <= self.radius:
            raise ValueError("ring support must stay off the axis (center.r > radius)")
        if self.amplitude == 0.0:
            raise ValueError("amplitude must be non-zero")
        return self


class VorticityField:
    """Immutable snapshot of the discrete vorticity.

    Elements are stored column-wise in read-only numpy arrays. ``area`` is the dr dz cell
    area; the d-dimensional measure of element i is ``sigma * r_i^(d-2) * area_i``.
    """

    __slots__ = ("d", "delta", "sigma", "r", "z", "q", "area")

    def __init__(
        self,
        d: int,
        r: Sequence[float],
        z: Sequence[float],
        q: Sequence[float],
        area: Sequence[float],
        delta: float = 0.0,
    ):
        check_dimension(d)
        if not delta >= 0.0 or not math.isfinite(delta):
            raise DomainError(f"blob length must be finite and >= 0, got {delta}")
        arrays = []
        for name, values in (("r", r), ("z", z), ("q", q), ("area", area)):
            arr = np.array(values, dtype=float, copy=True).reshape(-1)
            arr.flags.writeable = False
            arrays.append(arr)
        r_arr, z_arr, q_arr, area_arr = arrays
        n = r_arr.size
        if not (z_arr.size == q_arr.size == area_arr.size == n):
            raise DomainError("element columns must have equal length")
        if np.any(r_arr < 0.0) or not np.all(np.isfinite(r_arr)) or not np.all(np.isfinite(z_arr)):
            raise DomainError("element positions must be finite with r >= 0")
        if not np.all(np.isfinite(q_arr)):
            raise DomainError("q must be finite")
        if np.any(~(area_arr > 0.0)) or not np.all(np.isfinite(area_arr)):
            raise DomainError("element areas must be finite and positive")
        self.d = int(d)
        self.delta = float(delta)
        self.sigma = sphere_measure(self.d)
        self.r, self.z, self.q, self.area = r_arr, z_arr, q_arr, area_arr

    @classmethod
    def from_elements(
        cls, d: int, elements: Sequence[VortexElement], delta: float = 0.0
    ) -> "VorticityField":
        return cls(
            d,
            [e.pos.r for e in elements],
            [e.pos.z for e in elements],
            [e.q for e in elements],
            [e.area for e in elements],
            delta,
        )

    @property
    def size(self) -> int:
        return int(self.r.size)

    def __len__(self) -> int:
        return self.size

    @property
    def elements(self) -> List[VortexElement]:
        return [
            VortexElement(pos=HalfPlanePoint(r=ri, z=zi), q=qi, area=ai)
            for ri, zi, qi, ai in zip(
                self.r.tolist(), self.z.tolist(), self.q.tolist(), self.area.tolist()
            )
        ]

    @property
    def omega(self) -> np.ndarray:
        """Vorticity omega = q r^(d-2) at each element."""
        return self.q * self.r ** (self.d - 2)

    @property
    def circulation(self) -> np.ndarray:
        """Kernel weights omega_i * area_i."""
        return self.omega * self.area

    @property
    def measure(self) -> np.ndarray:
        """d-dimensional volume sigma r^(d-2) area of each element."""
        return self.sigma * self.r ** (self.d - 2) * self.area

    def is_zero(self) -> bool:
        return self.size == 0 or not np.any(self.q)

    def with_positions(
        self, r: np.ndarray, z: np.ndarray, area: Optional[np.ndarray] = None
    ) -> "VorticityField":
        """New field with moved elements; q is carried over untouched."""
        return VorticityField(
            self.d, r, z, self.q, self.area if area is None else area, self.delta
        )

    def with_delta(self, delta: float) -> "VorticityField":
        return VorticityField(self.d, self.r, self.z, self.q, self.area, delta)

    def concat(self, other: "VorticityField") -> "VorticityField":
        """Element-list concatenation; the blob length of ``self`` is kept."""
        if other.d != self.d:
            raise DomainError(f"cannot concatenate fields of dimension {self.d} and {other.d}")
        return VorticityField(
            self.d,
            np.concatenate([self.r, other.r]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.q, other.q]),
            np.concatenate([self.area, other.area]),
            self.delta,
        )

    def permuted(self, order: Sequence[int]) -> "VorticityField":
        idx = np.asarray(order, dtype=int)
        return VorticityField(
            self.d, self.r[idx], self.z[idx], self.q[idx], self.area[idx], self.delta
        )

    def __repr__(self) -> str:
        return f"VorticityField(d={self.d}, n={self.size}, delta={self.delta:.3g})"
