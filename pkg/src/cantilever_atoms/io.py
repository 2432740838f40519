"""CSV output with ``#``-prefixed metadata lines.

Numbers are written with 17 significant digits so a file read back gives
the same doubles, and metadata is emitted in sorted key order so identical
runs give byte-identical files.
"""

import io
import json

import numpy as np


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def format_csv(header, rows, metadata=None):
    out = io.StringIO()
    for key in sorted(metadata or {}):
        out.write(f"# {key}: {json.dumps(metadata[key], sort_keys=True)}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def write_csv(path, header, rows, metadata=None):
    text = format_csv(header, rows, metadata)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def read_csv(path):
    """``(metadata, header, data)`` with ``data`` a 2-D float array."""
    meta = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                try:
                    meta[key.strip()] = json.loads(value.strip())
                except json.JSONDecodeError:
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return meta, header, data
