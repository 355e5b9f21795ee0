"""Field and report serialization: RFC-4180 CSV for gridded fields and
deterministic JSON (17 significant digits, stable key order) for reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, build_grid

__all__ = ["write_field_csv", "read_field_csv", "write_json", "json_ready"]


def write_field_csv(path, fld: ScalarField) -> None:
    """One row per node, row-major: x[,y],value with a header row."""
    g = fld.grid
    header = ["x", "value"] if g.dim == 1 else ["x", "y", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for pt, val in zip(g.points, fld.values):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(val))])


def read_field_csv(path, grid: Grid | None = None) -> ScalarField:
    """Read a field written by write_field_csv; the grid is rebuilt from the
    coordinate columns unless supplied."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "value":
        raise ValueError(f"{path}: missing header row")
    dim = len(rows[0]) - 1
    data = np.array([[float(c) for c in r] for r in rows[1:]])
    vals = data[:, -1]
    if grid is None:
        coords = data[:, :dim]
        axes = [np.unique(coords[:, k]) for k in range(dim)]
        grid = build_grid(dim, ([ax[0] for ax in axes], [ax[-1] for ax in axes]),
                          [len(ax) for ax in axes])
        if not np.allclose(grid.points, coords, atol=1e-9):
            raise ValueError(f"{path}: nodes are not a row-major uniform grid")
    elif len(vals) != grid.n_nodes:
        raise ValueError(f"{path}: expected {grid.n_nodes} rows, got {len(vals)}")
    return ScalarField(grid, vals)


def json_ready(obj):
    """Recursively convert to JSON-serializable types; floats go through a
    17-significant-digit round trip so serialized reports are byte-stable."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(json_ready(payload), indent=2, sort_keys=True) + "\n")
