"""CSV and JSON persistence for series, sketches and reports.

CSV layout: one header row of dimension names, then one row per time point.
``transpose=True`` reads/writes the other orientation (one row per
dimension, first cell the name).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .count_sketch import SketchedSeries, sketch_from_dict, sketch_to_dict
from .errors import NonFinite, ParseError, RaggedRows
from .timeseries import MultiSeries


def _parse_cell(cell, row, col):
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(v):
        raise NonFinite(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return v


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    return rows


def load_csv(path, transpose: bool = False) -> MultiSeries:
    """Read a CSV into a MultiSeries; columns become dimensions in order.

    Error messages name the 1-based data row (header excluded) and column.
    """
    rows = _read_rows(path)
    if transpose:
        return _load_transposed(rows, path)
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise ParseError(f"{path}: header has an empty column name")
    if len(set(header)) != len(header):
        dup = next(h for h in header if header.count(h) > 1)
        raise ParseError(f"{path}: duplicate column name {dup!r}")
    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise RaggedRows(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            data[r - 1, c] = _parse_cell(cell.strip(), r, header[c])
    if data.shape[0] == 0:
        raise ParseError(f"{path}: no data rows")
    return MultiSeries(tuple(header), data.T.copy())


def _load_transposed(rows, path):
    names, vals = [], []
    width = None
    for r, row in enumerate(rows, start=1):
        name = row[0].strip()
        if not name:
            raise ParseError(f"{path}: row {r} has an empty dimension name")
        cells = row[1:]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRows(f"{path}: row {r} has {len(cells)} values, expected {width}")
        names.append(name)
        vals.append([_parse_cell(c.strip(), c_i, name) for c_i, c in enumerate(cells, start=1)])
    if len(set(names)) != len(names):
        raise ParseError(f"{path}: duplicate dimension names")
    if not width:
        raise ParseError(f"{path}: no data columns")
    return MultiSeries(tuple(names), np.array(vals))


def save_csv(t: MultiSeries, path, transpose: bool = False) -> None:
    """Write with 17 significant digits so values reload bit-exactly."""
    fmt = "%.17g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if transpose:
            for nm, row in zip(t.names, t.values):
                w.writerow([nm] + [fmt % v for v in row])
        else:
            w.writerow(t.names)
            for row in t.values.T:
                w.writerow([fmt % v for v in row])


def load_labels(path) -> np.ndarray:
    """0/1 labels from a one-column CSV (header optional)."""
    rows = _read_rows(path)
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1
    out = []
    for r, row in enumerate(rows[start:], start=1):
        v = _parse_cell(row[0].strip(), r, "label")
        if v not in (0.0, 1.0):
            raise ParseError(f"row {r}: label must be 0 or 1, got {row[0]!r}")
        out.append(int(v))
    return np.array(out, dtype=int)


def _clean(obj):
    """Make numpy scalars/arrays and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, sort_keys=False)


def save_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}") from None


def save_sketch(r: SketchedSeries, path) -> None:
    save_json(sketch_to_dict(r), path)


def load_sketch(path) -> SketchedSeries:
    doc = load_json(path)
    try:
        return sketch_from_dict(doc)
    except (KeyError, TypeError) as e:
        raise ParseError(f"{path}: malformed sketch file ({e})") from None
