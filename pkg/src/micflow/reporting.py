"""Versioned CSV tables that round-trip byte for byte."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TextIO

import numpy as np

SCHEMA_VERSION = 1
SCHEMA_COLUMN = "schema_version"


def format_value(v: Any) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return "" if v is None else str(v)


def parse_value(s: str) -> Any:
    """Inverse of :func:`format_value` for the scalar types it writes."""
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def write_table(rows: Iterable[Mapping[str, Any]], out: TextIO,
                columns: Sequence[str] | None = None) -> None:
    """Write rows with a trailing ``schema_version`` column."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([*columns, SCHEMA_COLUMN])
    for r in rows:
        writer.writerow([*(format_value(r.get(c)) for c in columns), SCHEMA_VERSION])


def table_text(rows, columns=None) -> str:
    buf = io.StringIO()
    write_table(rows, buf, columns)
    return buf.getvalue()


def save_table(rows, path: str | Path, columns=None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        write_table(rows, fh, columns)
    return path


def read_table(path: str | Path) -> tuple[list[str], list[dict[str, Any]]]:
    """Columns (including ``schema_version``) and typed rows of a written table."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, (parse_value(v) for v in rec))) for rec in reader]
    if not header or header[-1] != SCHEMA_COLUMN:
        raise ValueError(f"{path} has no {SCHEMA_COLUMN} column")
    return header, rows
