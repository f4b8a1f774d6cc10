"""Versioned plain-text model serialization helpers.

Floats are written with ``repr``, which round-trips IEEE doubles exactly,
so save -> load is bit-identical without a binary format.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import DataError


def write_atomic(path: str | Path, data: str | bytes) -> None:
    """Write via a temp file and rename, so readers never see partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        tmp.write_text(data)
    else:
        tmp.write_bytes(data)
    os.replace(tmp, path)


def fmt(x: float) -> str:
    return repr(float(x))


def array_lines(name: str, arr: np.ndarray) -> list[str]:
    """Encode an array as a header line plus one line per row (row-major)."""
    arr = np.asarray(arr, dtype=float)
    dims = " ".join(str(d) for d in arr.shape)
    lines = [f"array {name} {arr.ndim} {dims}".rstrip()]
    if arr.size == 0:
        return lines
    rows = arr.reshape(1, -1) if arr.ndim <= 1 else arr.reshape(arr.shape[0], -1)
    for row in rows:
        lines.append(" ".join(fmt(v) for v in row))
    return lines


class LineReader:
    """Sequential reader over the text layout produced by ``array_lines``."""

    def __init__(self, text: str):
        self.lines = [ln for ln in text.replace("\r\n", "\n").split("\n")]
        self.pos = 0

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line.strip()
        raise DataError("unexpected end of model file")

    def expect(self, keyword: str) -> list[str]:
        line = self.next_line()
        parts = line.split()
        if parts[0] != keyword:
            raise DataError(f"expected {keyword!r}, found {parts[0]!r}")
        return parts[1:]

    def scalar(self, keyword: str) -> float:
        return float(self.expect(keyword)[0])

    def integer(self, keyword: str) -> int:
        return int(self.expect(keyword)[0])

    def array(self, name: str) -> np.ndarray:
        parts = self.expect("array")
        if parts[0] != name:
            raise DataError(f"expected array {name!r}, found {parts[0]!r}")
        ndim = int(parts[1])
        shape = tuple(int(d) for d in parts[2 : 2 + ndim])
        if int(np.prod(shape)) == 0:
            return np.zeros(shape)
        n_rows = 1 if ndim <= 1 else shape[0]
        values = []
        for _ in range(n_rows):
            values.extend(float(tok) for tok in self.next_line().split())
        arr = np.array(values, dtype=float)
        expected = int(np.prod(shape)) if shape else 1
        if arr.size != expected:
            raise DataError(f"array {name!r}: expected {expected} values, got {arr.size}")
        return arr.reshape(shape)
