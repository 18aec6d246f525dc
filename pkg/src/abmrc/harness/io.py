"""CSV and JSON emission for run reports and benchmark tables."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..report import SERIES_COLUMNS

INT_COLUMNS = {"step", "K", "r"}


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_series(report, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_COLUMNS)
        for row in report.rows():
            writer.writerow([_cell(row[c]) for c in SERIES_COLUMNS])
    return path


def read_series(path):
    """Load a series CSV back into a dict of column lists (``None`` for empty cells)."""
    columns = {c: [] for c in SERIES_COLUMNS}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            for c in SERIES_COLUMNS:
                raw = row[c]
                if raw == "":
                    columns[c].append(None)
                elif c in INT_COLUMNS:
                    columns[c].append(int(raw))
                else:
                    columns[c].append(float(raw))
    return columns


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(data, path):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_table(rows, columns, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def read_table(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
