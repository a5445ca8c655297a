"""Snapshot files: one JSON header line, then raw little-endian float64.

Layout (schema "ff-grid-v1"):
  line 1   {"schema": "ff-grid-v1", "dims": [...], "spacing": [...],
            "origin": [...], "time": t}\n
  payload  values as '<f8', row-major, dims-shaped
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .pde import GridField, GridSpec

SCHEMA = "ff-grid-v1"


def write_field(path, field: GridField) -> None:
    header = {
        "schema": SCHEMA,
        "dims": list(field.grid.dims),
        "spacing": list(field.grid.spacing),
        "origin": list(field.grid.origin),
        "time": field.time,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> GridField:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("schema") != SCHEMA:
        raise ValueError(f"not a {SCHEMA} file: {path}")
    dims = tuple(int(d) for d in header["dims"])
    values = np.frombuffer(raw[nl + 1 :], dtype="<f8").reshape(dims).copy()
    grid = GridSpec(dims=dims, spacing=tuple(header["spacing"]), origin=tuple(header["origin"]))
    return GridField(grid=grid, time=float(header["time"]), values=values)
