"""
Run configuration for the experiment registry.
"""
from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from axivort.models.dynamics import SimConfig
from axivort.models.field import DipoleParams, RingParams, check_dimension


class ExperimentName(str, Enum):
    DIPOLE_GROWTH = "dipole_growth"
    SINGLE_RING = "single_ring"
    INEQUALITY_CORPUS = "inequality_corpus"
    KERNEL_BOUNDS = "kernel_bounds"
    HIGHD_STATIC = "highd_static"


class CorpusParams(BaseModel):
    """Randomized field corpus for the inequality harness."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    size: int = Field(default=20, ge=2, description="fields; runs also evaluate the doubled corpus")
    kind: Literal["rings", "dipoles"] = "rings"
    lambdas: List[float] = Field(default_factory=lambda: [0.5, 2.0, 10.0])

    @field_validator("lambdas")
    @classmethod
    def validate_lambdas(cls, v: List[float]) -> List[float]:
        if not v or any(lam <= 0.0 for lam in v):
            raise ValueError("scale factors must be a non-empty list of positive numbers")
        return v


class KernelBoundsParams(BaseModel):
    """Log grid on which kernel decay constants are measured."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    d_list: List[int] = Field(default_factory=lambda: [3, 4, 5, 6])
    ell_list: List[int] = Field(default_factory=lambda: [1, 2])
    s_min: float = Field(default=1e-6, gt=0.0)
    s_max: float = Field(default=1e6, gt=0.0)
    n: int = Field(default=200, ge=2)
    stability_tol: float = Field(default=0.05, gt=0.0, description="allowed change on doubling")

    @field_validator("d_list")
    @classmethod
    def validate_dimensions(cls, v: List[int]) -> List[int]:
        return [check_dimension(d) for d in v]

    @model_validator(mode="after")
    def validate_range(self) -> "KernelBoundsParams":
        if not self.s_min < self.s_max:
            raise ValueError("s_min must be smaller than s_max")
        if any(ell < 0 for ell in self.ell_list):
            raise ValueError("derivative orders must be non-negative")
        return self


class HighDParams(BaseModel):
    """Static high-dimensional corpus and the growth-exponent table."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    d_list: List[int] = Field(default_factory=lambda: [4, 5])
    corpus_size: int = Field(
        default=20, ge=2, description="fields per d; the doubled corpus checks stability"
    )
    table_d_list: List[int] = Field(default_factory=lambda: [3, 4, 5, 6])

    @field_validator("d_list", "table_d_list")
    @classmethod
    def validate_dimensions(cls, v: List[int]) -> List[int]:
        return [check_dimension(d) for d in v]


DYNAMIC_EXPERIMENTS = {ExperimentName.DIPOLE_GROWTH, ExperimentName.SINGLE_RING}


class RunConfig(BaseModel):
    """One experiment invocation; lengths in units of the bump radius scale, time in t."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentName
    sim: Optional[SimConfig] = None
    dipole: Optional[DipoleParams] = None
    ring: Optional[RingParams] = None
    corpus: CorpusParams = Field(default_factory=CorpusParams)
    kernel_bounds: KernelBoundsParams = Field(default_factory=KernelBoundsParams)
    highd: HighDParams = Field(default_factory=HighDParams)
    fit_window: Optional[Tuple[float, float]] = None
    corpus_seed: int = Field(default=0, ge=0)
    output_dir: str = "results"

    @model_validator(mode="after")
    def validate_blocks(self) -> "RunConfig":
        if self.experiment in DYNAMIC_EXPERIMENTS and self.sim is None:
            raise ValueError(f"experiment '{self.experiment.value}' needs a 'sim' block")
        if self.experiment is ExperimentName.DIPOLE_GROWTH and self.dipole is None:
            raise ValueError("experiment 'dipole_growth' needs a 'dipole' block")
        if self.experiment is ExperimentName.SINGLE_RING and self.ring is None:
            raise ValueError("experiment 'single_ring' needs a 'ring' block")
        initial = self.dipole if self.experiment is ExperimentName.DIPOLE_GROWTH else self.ring
        if self.experiment in DYNAMIC_EXPERIMENTS and initial.d != self.sim.d:
            raise ValueError(f"initial data dimension {initial.d} differs from sim.d {self.sim.d}")
        if self.fit_window is not None and not self.fit_window[0] < self.fit_window[1]:
            raise ValueError("fit_window must satisfy t_lo < t_hi")
        return self
