"""Atomic file output and fixed-format numeric text."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

SIG_DIGITS = 12


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write ``data`` to a temporary sibling file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def fmt(value) -> str:
    """Render numbers with 12 significant digits; pass other values through."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{SIG_DIGITS}g")
    return str(value)


def csv_text(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = [row[c] for c in columns] if isinstance(row, dict) else row
        writer.writerow([fmt(v) for v in values])
    return buf.getvalue()


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if obj == obj and abs(obj) != float("inf") else str(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def json_text(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 12 significant digits."""
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"
