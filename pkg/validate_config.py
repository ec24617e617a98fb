"""
Script to validate a run configuration before launching an experiment.
"""
import json
import sys
from pathlib import Path

from jsonschema import Draft202012Validator

from axivort.core.config import settings
from axivort.services.run_service import run_service
from axivort.utils.exceptions import ConfigurationError

SCHEMA_PATH = Path(__file__).parent / "axivort" / "schemas" / "run_config.schema.json"


def validate_run_config(config_path: str) -> bool:
    """Check a config against the published schema and the pydantic models."""
    print(f"🔍 Validating run configuration {config_path}...")
    print(f"✅ AXIVORT_THREADS: {settings.AXIVORT_THREADS}")

    path = Path(config_path)
    if not path.is_file():
        print(f"❌ {path} does not exist")
        return False
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        print(f"❌ {path} is not valid JSON: {exc}")
        return False

    schema = json.loads(SCHEMA_PATH.read_text())
    errors = sorted(Draft202012Validator(schema).iter_errors(raw), key=lambda e: list(e.path))
    for error in errors:
        location = ".".join(str(p) for p in error.path) or "<root>"
        print(f"❌ schema: {location}: {error.message}")

    try:
        config = run_service.load_config(path)
    except ConfigurationError as exc:
        print(f"❌ {exc}")
        return False

    if errors:
        return False

    print(f"✅ experiment: {config.experiment.value}")
    print(f"✅ output_dir: {config.output_dir}")
    if config.sim is not None:
        dt = "CFL-chosen" if config.sim.dt is None else config.sim.dt
        sim = config.sim
        print(f"✅ sim: t_end={sim.t_end}, dt={dt}, {sim.integrator}, d={sim.d}")
    print("\n✅ Configuration looks good!")
    return True


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("usage: python validate_config.py <config.json>")
        sys.exit(1)
    sys.exit(0 if validate_run_config(sys.argv[1]) else 1)
