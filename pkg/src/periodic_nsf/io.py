"""Snapshots (JSON header line + raw little-endian float64) and CSV time series."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid

__all__ = ["SNAPSHOT_VERSION", "Snapshot", "SnapshotError", "save_snapshot", "load_snapshot", "emit_timeseries", "read_timeseries"]

SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    pass


@dataclass
class Snapshot:
    grid: Grid
    data: np.ndarray
    time: float = 0.0


def save_snapshot(path, grid: Grid, data: np.ndarray, time: float = 0.0) -> None:
    """Write a physical field of shape ``(C, N, N, N)`` or ``(N, N, N)``."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 3:
        data = data[None]
    if data.shape[1:] != grid.physical_shape:
        raise SnapshotError(f"field shape {data.shape} does not match grid {grid.physical_shape}")
    header = {
        "version": SNAPSHOT_VERSION,
        "L": grid.L,
        "N": grid.N,
        "C": int(data.shape[0]),
        "time": float(time),
        "layout": "row-major",
        "dtype": "f64-le",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def load_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise SnapshotError("snapshot header is missing or truncated")
    try:
        header = json.loads(raw[:cut])
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"unreadable snapshot header: {exc}") from None
    if header.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported version {header.get('version')!r} (expected {SNAPSHOT_VERSION})")
    if header.get("layout") != "row-major" or header.get("dtype") != "f64-le":
        raise SnapshotError("unsupported layout or dtype")
    grid = Grid(header["L"], header["N"])
    C = int(header["C"])
    body = raw[cut + 1 :]
    expected = C * grid.N**3 * 8
    if len(body) != expected:
        raise SnapshotError(f"snapshot truncated or padded: {len(body)} bytes of payload, expected {expected}")
    data = np.frombuffer(body, dtype="<f8").reshape(C, *grid.physical_shape).astype(float)
    return Snapshot(grid, data, float(header.get("time", 0.0)))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def emit_timeseries(records, path, columns=None) -> None:
    """CSV with a header row; ``columns`` fixes the order (else the first record's key order)."""
    records = list(records)
    if columns is None:
        columns = list(records[0]) if records else ["t"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            if set(rec) != set(columns):
                raise ValueError(f"record keys {sorted(rec)} differ from columns {columns}")
            writer.writerow([_fmt(rec[c]) for c in columns])


def read_timeseries(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
