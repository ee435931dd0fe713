"""CSV ingestion and lossless CSV/JSON emission."""

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .generators import SeriesPair

MIN_ROWS = 80
TRANSFORMS = ("none", "log-return", "abs-log-return")


def _parse_float(cell):
    cell = cell.strip()
    if not cell:
        raise ValueError("blank cell")
    return float(cell)


def _is_header(cells):
    try:
        for c in cells:
            _parse_float(c)
    except ValueError:
        return True
    return False


def _column_index(selector, header, width):
    if isinstance(selector, str) and not selector.lstrip("-").isdigit():
        if header is None or selector not in header:
            raise DataError(f"missing column {selector!r}")
        return header.index(selector)
    idx = int(selector)
    if not 0 <= idx < width:
        raise DataError(f"missing column {idx}: file has {width} columns")
    return idx


def read_table(path):
    """Rows of a comma-separated file; returns ``(header or None, list of (line_no, cells))``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data")
    header = None
    if _is_header(rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    return header, rows


def load_columns(path, columns):
    """Numeric columns selected by index or header name, as float arrays."""
    header, rows = read_table(path)
    width = len(header) if header is not None else len(rows[0][1]) if rows else 0
    idx = [_column_index(c, header, width) for c in columns]
    out = [[] for _ in idx]
    for line, cells in rows:
        if len(cells) != width:
            raise DataError(f"ragged rows: row {line} has {len(cells)} cells, expected {width}")
        for k, j in enumerate(idx):
            try:
                out[k].append(_parse_float(cells[j]))
            except ValueError:
                raise DataError(f"non-numeric cell {cells[j]!r} at row {line}, column {j}") from None
    return [np.asarray(c, dtype=np.float64) for c in out]


def transform_series(values, transform):
    """Apply a returns transform to a price series."""
    values = np.asarray(values, dtype=np.float64)
    if transform == "none":
        return values
    if transform not in TRANSFORMS:
        raise DataError(f"unknown transform {transform!r}")
    if np.any(values <= 0):
        raise DataError("log returns need strictly positive prices")
    r = np.diff(np.log(values))
    return np.abs(r) if transform == "abs-log-return" else r


def load_series_csv(path, x_col=0, y_col=1, transform="none", min_rows=MIN_ROWS):
    """Read two equal-length numeric columns into a :class:`SeriesPair`.

    `min_rows` guards the default scale grid; pass ``None`` when the scales
    are given explicitly.
    """
    x, y = load_columns(path, [x_col, y_col])
    x = transform_series(x, transform)
    y = transform_series(y, transform)
    if min_rows is not None and x.size < min_rows:
        raise DataError(f"{path}: {x.size} rows; the default scale grid needs at least {min_rows}")
    if x.size == 0:
        raise DataError(f"{path}: no data rows")
    return SeriesPair(x, y)


def load_field_csv(path):
    """Rectangular numeric CSV without header (rows are the first index)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"ragged rows: row {i + 1} has {len(r)} cells, expected {width}")
        try:
            out[i] = [_parse_float(c) for c in r]
        except ValueError:
            raise DataError(f"non-numeric cell at row {i + 1}") from None
    return out


def format_value(v):
    """17 significant digits for floats, so that every value round-trips exactly."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows):
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])

    return _atomic_write(path, write)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(path, payload):
    return _atomic_write(path, lambda fh: json.dump(_jsonable(payload), fh, indent=2, sort_keys=True))


def read_csv_dicts(path):
    """Rows of a written CSV as dicts of floats (strings kept where not numeric)."""
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
            out.append(parsed)
        return out
