"""
CSV/JSON persistence for field snapshots and diagnostics series.

Numbers are written with 17 significant digits so finite doubles round-trip bit-exactly.
"""
import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from axivort.core.logging import logger
from axivort.models.dynamics import DIAGNOSTIC_COLUMNS, DiagnosticsRecord
from axivort.models.field import VorticityField
from axivort.utils.exceptions import ConfigurationError

FIELD_COLUMNS = ("r", "z", "q", "area")

PathLike = Union[str, Path]


def format_number(value: float) -> str:
    return format(float(value), ".17g")


class SnapshotService:
    """Service class for reading and writing run artifacts."""

    def write_field(self, field: VorticityField, csv_path: PathLike) -> Path:
        """
        Write a field as ``r,z,q,area`` rows plus a ``{d, delta, sigma}`` JSON sidecar.

        Args:
            field: Snapshot to persist
            csv_path: Destination of the element table

        Returns:
            Path of the JSON sidecar
        """
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(FIELD_COLUMNS)
            columns = (field.r, field.z, field.q, field.area)
            for row in zip(*(c.tolist() for c in columns)):
                writer.writerow([format_number(v) for v in row])
        sidecar = csv_path.with_suffix(".json")
        sidecar.write_text(
            json.dumps({"d": field.d, "delta": field.delta, "sigma": field.sigma}, indent=2) + "\n"
        )
        logger.debug(f"Field snapshot written: {csv_path} ({field.size} elements)")
        return sidecar

    def read_field(self, csv_path: PathLike) -> VorticityField:
        csv_path = Path(csv_path)
        sidecar = csv_path.with_suffix(".json")
        if not csv_path.exists() or not sidecar.exists():
            raise ConfigurationError(f"snapshot {csv_path} or its sidecar {sidecar} is missing")
        meta = json.loads(sidecar.read_text())
        columns: Dict[str, List[float]] = {name: [] for name in FIELD_COLUMNS}
        with csv_path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            if tuple(reader.fieldnames or ()) != FIELD_COLUMNS:
                raise ConfigurationError(f"unexpected snapshot header in {csv_path}")
            for row in reader:
                for name in FIELD_COLUMNS:
                    columns[name].append(float(row[name]))
        return VorticityField(
            int(meta["d"]),
            columns["r"],
            columns["z"],
            columns["q"],
            columns["area"],
            float(meta["delta"]),
        )

    def write_diagnostics(self, records: Sequence[DiagnosticsRecord], path: PathLike) -> Path:
        """Diagnostics stream, one row per emitted record under the fixed header."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(DIAGNOSTIC_COLUMNS)
            for record in records:
                writer.writerow([format_number(v) for v in record.csv_row()])
        return path

    def read_diagnostics(self, path: PathLike) -> List[Dict[str, float]]:
        with Path(path).open(newline="") as handle:
            return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(handle)]

    def write_plot_data(
        self, columns: Sequence[str], rows: Sequence[Sequence[float]], path: PathLike
    ) -> Path:
        """Whitespace-separated columns with a ``#`` header line, ready for gnuplot."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["# " + " ".join(columns)]
        lines.extend(" ".join(format_number(v) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n")
        return path

    def write_json(self, payload: Dict[str, Any], path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
        return path


# Global service instance
snapshot_service = SnapshotService()
