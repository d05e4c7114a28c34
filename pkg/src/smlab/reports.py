"""
Experiment reports and artifact writers.

Every run writes report.json, one CSV per table and manifest.json into
its output directory. Sample sets are written as .npy arrays next to a
JSON manifest.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class ExperimentReport:
    """
    Structured record of one experiment run.

    Estimates map a name to {"value", "stderr", optional "target"};
    verdicts map a check name to pass/fail. Tables are lists of row
    dicts and become CSV files. wall_time is the only field that is
    not reproduced by re-running with the same config and seed.
    """

    command: str
    config_hash: str
    seed: int
    threads: int
    tool_version: str
    wall_time: float = 0.0
    estimates: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)

    def add_estimate(
        self,
        name: str,
        value: float,
        stderr: Optional[float] = None,
        target: Optional[float] = None,
    ) -> None:
        entry: Dict[str, Any] = {"value": float(value)}
        if stderr is not None:
            entry["stderr"] = float(stderr)
        if target is not None:
            entry["target"] = float(target)
        self.estimates[name] = entry

    def add_verdict(self, name: str, passed: bool) -> None:
        self.verdicts[name] = bool(passed)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        passed = sum(1 for v in self.verdicts.values() if v)
        return _jsonable(
            {
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "command": self.command,
                "config_hash": self.config_hash,
                "seed": self.seed,
                "threads": self.threads,
                "tool_version": self.tool_version,
                "wall_time": self.wall_time,
                "summary": {
                    "verdicts": len(self.verdicts),
                    "passed": passed,
                    "failed": len(self.verdicts) - passed,
                },
                "estimates": self.estimates,
                "verdicts": self.verdicts,
                "tables": self.tables,
                "notes": self.notes,
                "artifacts": self.artifacts,
            }
        )


def write_json(path: Path, payload: Dict[str, Any]) -> str:
    """Write a JSON document, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, indent=2, ensure_ascii=False)
    return str(path)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Write rows under a header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_jsonable(v) for v in row])
    return str(path)


def write_table(path: Path, rows: List[Dict[str, Any]]) -> str:
    """Write a list of row dicts as CSV; columns follow the first row."""
    header = list(rows[0].keys()) if rows else []
    return write_csv(path, header, ([row.get(k) for k in header] for row in rows))


def save_arrays(
    out_dir: Path,
    name: str,
    arrays: Dict[str, np.ndarray],
    meta: Dict[str, Any],
) -> str:
    """
    Persist named float arrays as .npy files plus a JSON manifest.

    Returns:
        Path of the manifest file
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for key, array in arrays.items():
        target = out_dir / f"{name}_{key}.npy"
        np.save(target, np.asarray(array, dtype=float))
        files[key] = target.name
    manifest = {"name": name, "files": files, **meta}
    return write_json(out_dir / f"{name}_manifest.json", manifest)


def load_arrays(manifest_path: Path) -> Dict[str, np.ndarray]:
    """Load arrays written by save_arrays()."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    return {
        key: np.load(manifest_path.parent / filename)
        for key, filename in manifest["files"].items()
    }


def write_run_outputs(report: ExperimentReport, out_dir: str, caps: Dict[str, Any]) -> List[str]:
    """
    Write report.json, one CSV per table and manifest.json.

    Args:
        report: Finished experiment report
        out_dir: Output directory
        caps: Size caps in force during the run

    Returns:
        List of written file paths
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for table_name, rows in report.tables.items():
        if rows:
            written.append(write_table(out / f"{table_name}.csv", rows))
    report.artifacts = sorted(set(report.artifacts) | {Path(p).name for p in written})
    written.append(write_json(out / "report.json", report.to_dict()))
    manifest = {
        "command": report.command,
        "config_hash": report.config_hash,
        "seed": report.seed,
        "threads": report.threads,
        "tool_version": report.tool_version,
        "caps": caps,
        "artifacts": report.artifacts,
    }
    written.append(write_json(out / "manifest.json", manifest))
    return written
