"""Pytest configuration and fixtures."""
import json
from pathlib import Path
from typing import Callable, Dict

import pytest

from axivort.models.dynamics import DiagnosticsRecord
from axivort.models.field import DipoleParams, HalfPlanePoint, RingParams, VorticityField
from axivort.services.field_service import field_service

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "axivort" / "schemas"


@pytest.fixture
def hand_field() -> VorticityField:
    """Two hand-placed elements in d = 3 with known norms."""
    return VorticityField(3, r=[1.0, 2.0], z=[0.0, 0.0], q=[1.0, -2.0], area=[0.1, 0.1])


@pytest.fixture
def ring_params() -> RingParams:
    """Thin positive ring of core radius 0.1 centred at (1, 0)."""
    return RingParams(center=HalfPlanePoint(r=1.0, z=0.0), radius=0.1, resolution=8)


@pytest.fixture
def ring_field(ring_params: RingParams) -> VorticityField:
    """Discretised thin ring."""
    return field_service.make_ring(ring_params)


@pytest.fixture
def dipole_field() -> VorticityField:
    """Coarse default dipole in d = 3."""
    return field_service.make_dipole(DipoleParams(resolution=8))


@pytest.fixture
def zero_field() -> VorticityField:
    """Non-empty field whose relative vorticity vanishes everywhere."""
    return VorticityField(3, r=[1.0, 1.5], z=[0.0, 0.5], q=[0.0, 0.0], area=[0.01, 0.01])


@pytest.fixture
def make_record() -> Callable[..., DiagnosticsRecord]:
    """Factory for diagnostics records with sensible defaults."""

    def factory(**overrides: float) -> DiagnosticsRecord:
        values: Dict[str, float] = {
            "t": 0.0,
            "R": 1.0,
            "omega_max": 1.0,
            "relvort_L1": 1.0,
            "relvort_Linf": 1.0,
            "r_omega_L1": 1.0,
            "energy": 1.0,
            "I_r2": 1.0,
            "I_z": 1.0,
            "L": 1.0,
            "max_ur": 0.0,
            "ur_on_R": 0.0,
        }
        values.update(overrides)
        return DiagnosticsRecord(**values)

    return factory


@pytest.fixture
def report_schema() -> dict:
    """Published schema of report.json."""
    return json.loads((SCHEMA_DIR / "report.schema.json").read_text())


@pytest.fixture
def run_config_schema() -> dict:
    """Published schema of the run configuration."""
    return json.loads((SCHEMA_DIR / "run_config.schema.json").read_text())


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[dict], Path]:
    """Write a run configuration dictionary to a temporary JSON file."""

    def writer(payload: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path

    return writer
