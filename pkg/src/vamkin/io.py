"""Flat-file formats: classified grids as CSV, records as JSON lines, and
``key = value`` config files."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np

GRID_HEADER = ("x", "y", "class", "value")


def fmt(value: float) -> str:
    """Six significant digits; ``nan`` for missing values."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def write_grid_csv(path, xs, ys, cells, values) -> None:
    """One row per cell, x varying fastest. ``cells``/``values`` are (ny, nx)."""
    cells = np.asarray(cells)
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                writer.writerow((fmt(x), fmt(y), int(cells[iy, ix]), fmt(values[iy, ix])))


def read_grid_csv(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_grid_csv`: ``(xs, ys, cells, values)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != GRID_HEADER:
            raise ValueError(f"unexpected grid header {header}")
        rows = [r for r in reader if r]
    x = np.array([float(r[0]) for r in rows])
    y = np.array([float(r[1]) for r in rows])
    cls = np.array([int(r[2]) for r in rows], dtype=np.int8)
    val = np.array([float(r[3]) for r in rows])
    xs = np.unique(x)
    ys = np.unique(y)
    nx, ny = xs.size, ys.size
    if nx * ny != len(rows):
        raise ValueError("grid file is not a full raster")
    return xs, ys, cls.reshape(ny, nx), val.reshape(ny, nx)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def record_line(record: Dict) -> str:
    return json.dumps({k: _jsonable(v) for k, v in record.items()}, sort_keys=False)


def write_records(path, records: Iterable[Dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_line(rec) + "\n")


def read_records(path) -> List[Dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_config(path) -> Dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are normalized to underscores (``phi-range`` == ``phi_range``).
    """
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out
