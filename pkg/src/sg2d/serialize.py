"""On-disk formats: CSV tables, JSON manifests, and binary field banks.

A field bank is one JSON header line (utf-8, newline-terminated) followed by
the raw little-endian float64 array bytes in C order; the header records the
shape, dtype, and run metadata.  CSV floats are written with shortest
round-trip formatting so identical runs produce byte-identical bodies.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path):
    lines = Path(path).read_text().strip().split("\n")
    cols = lines[0].split(",")
    return cols, [line.split(",") for line in lines[1:]]


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def write_field_bank(path, header: dict, arrays: np.ndarray) -> None:
    """Store a stack of real field snapshots with a JSON header line."""
    arrays = np.ascontiguousarray(arrays, dtype="<f8")
    head = dict(header)
    head["shape"] = list(arrays.shape)
    head["dtype"] = "<f8"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write((json.dumps(head, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(arrays.tobytes(order="C"))


def read_field_bank(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype=header["dtype"])
    return header, data.reshape(header["shape"])
