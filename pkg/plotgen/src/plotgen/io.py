"""CSV loading with strict schema validation.

The input files are the convergence and error-field CSVs produced by the
integrator harness; their headers are consumed verbatim and any deviation is
a schema error naming the offending column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CONVERGENCE_COLUMNS = [
    "problem",
    "method",
    "tau",
    "error_l2",
    "order_pairwise",
    "n_steps",
    "n_diffusion_flows",
    "n_source_flows",
    "n_corrector_solves",
    "wall_time_s",
]

ERRORFIELD_1D_COLUMNS = ["x", "abs_error"]
ERRORFIELD_2D_COLUMNS = ["x", "y", "abs_error"]


class SchemaError(ValueError):
    """Input CSV does not match the expected harness schema."""


@dataclass
class ConvergenceRow:
    problem: str
    method: str
    tau: float
    error_l2: float
    n_steps: int
    n_diffusion_flows: int
    n_source_flows: int


def _read_rows(path: str | Path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty file, no header row")
    reader = csv.DictReader(lines)
    return reader.fieldnames or [], list(reader)


def _require_columns(found: list[str], expected: list[str], path) -> None:
    for col in expected:
        if col not in found:
            raise SchemaError(f"{path}: missing column {col!r}")


def load_convergence(path: str | Path) -> list[ConvergenceRow]:
    header, raw = _read_rows(path)
    _require_columns(header, CONVERGENCE_COLUMNS, path)
    rows = []
    for r in raw:
        if not r["error_l2"]:
            continue  # failed ladder cell: recorded without an error value
        rows.append(
            ConvergenceRow(
                problem=r["problem"],
                method=r["method"],
                tau=float(r["tau"]),
                error_l2=float(r["error_l2"]),
                n_steps=int(r["n_steps"]),
                n_diffusion_flows=int(r["n_diffusion_flows"]),
                n_source_flows=int(r["n_source_flows"]),
            )
        )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def load_errorfield(path: str | Path) -> tuple[int, list[dict]]:
    """Returns (dimension, rows) with rows as float dicts."""
    header, raw = _read_rows(path)
    if "y" in (header or []):
        _require_columns(header, ERRORFIELD_2D_COLUMNS, path)
        dim = 2
    else:
        _require_columns(header, ERRORFIELD_1D_COLUMNS, path)
        dim = 1
    if not raw:
        raise SchemaError(f"{path}: no data rows")
    rows = [{k: float(v) for k, v in r.items()} for r in raw]
    return dim, rows
