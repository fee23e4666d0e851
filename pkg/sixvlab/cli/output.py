"""
Result files of a run: CSV tables, JSON summaries and ``manifest.json``.

Cells are formatted so that the same configuration and seed give
byte-identical files on any machine.
"""

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .._version import get_version
from ..utils.logger import get_logger

UTC = timezone.utc


def format_value(value) -> str:
    """CSV text of one cell: floats with 17 significant digits, no locale."""
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


class ResultWriter:
    """
    Writes the result files of one run into an output directory.

    Result files depend only on the configuration and seed; the timestamps
    go to ``manifest.json`` alone.
    """

    def __init__(self, out_dir: str | Path):
        self.logger = get_logger("sixvlab.output")
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.started = datetime.now(UTC)

    def write_csv(self, name: str, rows: list[dict]) -> Path:
        """
        Write rows to ``name``; the header is the union of keys in first-seen order.
        """
        path = self.out_dir / name
        header: list[str] = []
        for row in rows:
            header.extend(k for k in row if k not in header)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(row.get(k)) for k in header])
        self._record(path, len(rows))
        return path

    def write_json(self, name: str, data) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_jsonable(data), f, indent=2, sort_keys=True, allow_nan=True)
            f.write("\n")
        self._record(path)
        return path

    def _record(self, path: Path, n_rows: int | None = None) -> None:
        self.files.append(path.name)
        detail = f" ({n_rows} rows)" if n_rows is not None else ""
        self.logger.info(f"Wrote {path}{detail}")

    def write_manifest(self, parameters: dict, status: int) -> Path:
        """Parameters, seed, versions, timestamps and the files of the run."""
        manifest = {
            "parameters": parameters,
            "seed": parameters.get("seed"),
            "exit_status": status,
            "files": list(self.files),
            "versions": {
                "sixvlab": get_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "started": self.started.isoformat(),
            "finished": datetime.now(UTC).isoformat(),
        }
        path = self.out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_jsonable(manifest), f, indent=2, sort_keys=True)
            f.write("\n")
        self.logger.info(f"Wrote run manifest {path}")
        return path
