"""Result tables and their deterministic CSV/JSON serialization.

CSV layout::

    # chiralwqed-metadata: {"...": ...}
    kd,band_index,energy_re
    -3.1101767270538954,0,-0.0078...

The metadata line is compact, key-sorted JSON. Floats are written with
``repr`` (shortest round-trip form), complex columns are split into ``_re`` and
``_im`` columns, and missing values are empty cells (CSV) or ``null`` (JSON).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METADATA_PREFIX = "# chiralwqed-metadata: "
KINDS = ("float", "int", "str", "complex")


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = ""
    kind: str = "float"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown column kind {self.kind!r}")

    def flat_names(self):
        return [f"{self.name}_re", f"{self.name}_im"] if self.kind == "complex" else [self.name]


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = [c if isinstance(c, Column) else Column(*c) for c in self.columns]
        names = [n for c in self.columns for n in c.flat_names()]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {names}")
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row {row!r} has {len(row)} cells, expected {width}")

    @property
    def flat_columns(self) -> list:
        return [(n, c.unit, "float" if c.kind == "complex" else c.kind)
                for c in self.columns for n in c.flat_names()]

    def flat_rows(self) -> list:
        out = []
        for row in self.rows:
            flat = []
            for col, cell in zip(self.columns, row):
                if col.kind == "complex":
                    z = complex(cell) if cell is not None else complex("nan")
                    flat += [z.real, z.imag]
                else:
                    flat.append(cell)
            out.append(flat)
        return out

    def column(self, name: str) -> list:
        names = [n for n, _, _ in self.flat_columns]
        if name not in names:
            raise KeyError(name)
        j = names.index(name)
        return [r[j] for r in self.flat_rows()]

    def has_columns(self, *names) -> bool:
        have = {n for n, _, _ in self.flat_columns}
        return all(n in have for n in names)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        raise TypeError("complex values must be split into _re/_im before serialization")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _csv_cell(value, kind):
    if value is None:
        return ""
    if kind == "float":
        x = float(value)
        return repr(x) if math.isfinite(x) else ("" if math.isnan(x) else repr(x))
    if kind == "int":
        return str(int(value))
    return str(value)


def render_table(table: ResultTable, fmt: str) -> str:
    meta = _clean(dict(table.metadata))
    meta["units"] = {n: u for n, u, _ in table.flat_columns}
    meta["kinds"] = {n: k for n, _, k in table.flat_columns}
    if fmt == "json":
        doc = {
            "metadata": meta,
            "columns": [{"name": n, "unit": u, "kind": k} for n, u, k in table.flat_columns],
            "rows": _clean(table.flat_rows()),
        }
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO(newline="")
        buf.write(METADATA_PREFIX + json.dumps(meta, sort_keys=True, separators=(",", ":"),
                                               allow_nan=False) + "\r\n")
        writer = csv.writer(buf, lineterminator="\r\n")
        cols = table.flat_columns
        writer.writerow([n for n, _, _ in cols])
        for row in table.flat_rows():
            writer.writerow([_csv_cell(v, k) for v, (_, _, k) in zip(row, cols)])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'json'")


def infer_format(path, fmt=None) -> str:
    if fmt:
        return fmt
    return "json" if str(path).lower().endswith(".json") else "csv"


def write_table(table: ResultTable, path, fmt: str | None = None) -> None:
    fmt = infer_format(path, fmt)
    text = render_table(table, fmt)
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror or err}") from err


def _parse_cell(text, kind):
    if text == "":
        return float("nan") if kind == "float" else None
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    return text


def read_table(path) -> ResultTable:
    """Inverse of :func:`write_table`; complex columns come back as _re/_im pairs."""
    path = os.fspath(path)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cols = [Column(c["name"], c.get("unit", ""), c.get("kind", "float")) for c in doc["columns"]]
        rows = [tuple(float("nan") if (v is None and c.kind == "float") else v
                      for v, c in zip(r, cols)) for r in doc["rows"]]
        return ResultTable(cols, rows, doc["metadata"])
    lines = text.splitlines()
    if not lines or not lines[0].startswith(METADATA_PREFIX):
        raise ValueError(f"{path}: missing metadata line")
    meta = json.loads(lines[0][len(METADATA_PREFIX):])
    reader = csv.reader(lines[1:])
    header = next(reader)
    kinds = meta.get("kinds", {})
    cols = [Column(n, meta.get("units", {}).get(n, ""), kinds.get(n, "float")) for n in header]
    rows = [tuple(_parse_cell(v, c.kind) for v, c in zip(r, cols)) for r in reader]
    return ResultTable(cols, rows, meta)
