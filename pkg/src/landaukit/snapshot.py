"""LCF1 checkpoint format: fixed-layout little-endian binary field dumps.

Layout: 4 magic bytes 'LCF1'; u32 grid size n; f64 half-width L; f64 time;
then n^3 f64 field values in C order (v1 slowest).  Everything is explicitly
little-endian so a file written on any platform reads identically, and a
write-then-read round-trips bitwise.
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Field, GridSpec

__all__ = ["SnapshotError", "write_snapshot", "read_snapshot", "MAGIC"]

MAGIC = b"LCF1"
_HEADER = struct.Struct("<4sIdd")


class SnapshotError(ValueError):
    """Malformed or truncated LCF1 data."""


def write_snapshot(path: str, f: Field, time: float) -> None:
    payload = np.ascontiguousarray(f.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, f.grid.n, f.grid.L, float(time)))
        fh.write(payload.tobytes())


def read_snapshot(path: str) -> tuple[Field, float]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise SnapshotError(f"truncated header in {path!r}")
        magic, n, L, time = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SnapshotError(
                f"bad magic {magic!r} in {path!r}; not an LCF1 file")
        grid = GridSpec(int(n), float(L))
        raw = fh.read(8 * n**3)
        if len(raw) < 8 * n**3:
            raise SnapshotError(
                f"truncated field data in {path!r}: got {len(raw)} bytes, "
                f"expected {8 * n**3}")
        vals = np.frombuffer(raw, dtype="<f8").reshape((n, n, n))
    return Field(vals.astype(np.float64), grid), float(time)
