"""Deterministic, atomic file output.

All numeric artifacts use 17-significant-digit decimal formatting and LF line
endings so that repeated runs produce byte-identical files; writes go through
a temporary file renamed into place.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


def fmt(x) -> str:
    """Canonical 17-significant-digit decimal rendering of a float."""
    return format(float(x), ".17g")


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv_atomic(path, header, rows) -> None:
    """Write rows of floats (or strings) as CSV with fixed float formatting."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else fmt(x) for x in row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_json_atomic(path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def write_jsonl_atomic(path, records) -> None:
    write_text_atomic(path, "".join(json.dumps(r) + "\n" for r in records))
