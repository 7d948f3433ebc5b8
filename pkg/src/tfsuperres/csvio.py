"""Self-describing CSV files: '#' comment lines, one header row, data rows.

Floats are written with 17 significant digits so reruns are byte-identical
and values round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


class CSVFormatError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path, columns, rows, comments=()):
    """Write ``rows`` (sequences or dicts keyed by column) to ``path``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row[c] for c in columns]
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path, required=None):
    """Read a file written by :func:`write_csv`.

    Returns ``(comments, columns)`` where ``columns`` maps each header name to
    a float array. Raises CSVFormatError with the offending line number.
    """
    path = Path(path)
    comments, header, data = [], None, []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped[1:].strip())
                continue
            fields = next(csv.reader([stripped]))
            if header is None:
                header = [f.strip() for f in fields]
                if required:
                    missing = [c for c in required if c not in header]
                    if missing:
                        raise CSVFormatError(path, lineno, f"missing columns {missing}")
                continue
            if len(fields) != len(header):
                raise CSVFormatError(path, lineno,
                                     f"expected {len(header)} fields, found {len(fields)}")
            try:
                data.append([float(f) for f in fields])
            except ValueError as exc:
                raise CSVFormatError(path, lineno, str(exc)) from None
    if header is None:
        raise CSVFormatError(path, 0, "no header row")
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return comments, {name: arr[:, i] for i, name in enumerate(header)}
