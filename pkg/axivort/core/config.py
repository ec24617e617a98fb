"""
Core configuration settings for the axivort vortex engine.
"""
from typing import ClassVar

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-level settings. Only the worker count is read from the environment."""

    APP_NAME: ClassVar[str] = "axivort"
    APP_VERSION: ClassVar[str] = "1.0.0"

    # Worker count for target-parallel kernel sums; never changes results
    AXIVORT_THREADS: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    @field_validator("AXIVORT_THREADS", mode="before")
    @classmethod
    def parse_thread_count(cls, v: object) -> object:
        """Accept blank values from .env files as the default."""
        if isinstance(v, str) and not v.strip():
            return 1
        return v


class NumericsDefaults(BaseModel):
    """Numerical defaults shared by the services. Not environment driven."""

    model_config = ConfigDict(frozen=True)

    # Kernels
    QUAD_REL_TOL: float = 1e-10
    QUAD_LIMIT: int = 200
    CLOSED_FORM_MAX_S: float = 64.0
    FAR_PANEL_ORDER: int = 24
    GRADED_PANEL_ORDER: int = 16
    TABLE_NODES: int = 40000
    TABLE_S_MIN: float = 1e-8
    TABLE_S_MAX: float = 1e8
    TABLE_VALIDATION_TOL: float = 1e-8
    KERNEL_BACKEND: str = "auto"

    # Field construction
    SUPPORT_DEADBAND: float = 1e-14
    BLOB_FACTOR: float = 1.5
    DIPOLE_CENTER_R: float = 1.0
    DIPOLE_CENTER_Z: float = 1.0
    DIPOLE_RADIUS: float = 0.25
    DIPOLE_AMPLITUDE: float = 1.0
    MIN_RESOLUTION: int = 4

    # Biot-Savart probes
    TARGET_CHUNK: int = 256
    PROBE_NZ: int = 32
    PROBE_REFINE_NZ: int = 16
    SUP_WINDOW_R_FACTOR: float = 3.0
    SUP_WINDOW_EXTENT_FACTOR: float = 5.0
    LATTICE_SIZE: int = 24
    LATTICE_DILATION: float = 1.5
    SUP_CANDIDATES: int = 8
    SUP_REFINE_LEVELS: int = 3
    SUP_STENCIL: int = 5
    ENERGY_BOX_FACTOR: float = 3.0
    ENERGY_PANELS: int = 48
    ENERGY_PANEL_ORDER: int = 6

    # Dynamics and experiments
    CFL: float = 0.2
    BOUND_SLACK: float = 0.05
    CLAIM_TOL: float = 1e-6
    MONOTONE_SLACK: float = 1e-6
    CONSERVATION_TOL: float = 1e-3
    ENERGY_DRIFT_TOL: float = 1e-2
    SCALING_TOL: float = 1e-6
    CORPUS_STABILITY_TOL: float = 0.1
    MIN_FIT_SAMPLES: int = 8
    GROWTH_MARGIN: float = 0.15


# Global settings instances
settings = Settings()
numerics = NumericsDefaults()
