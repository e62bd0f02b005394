"""Binary snapshot files for a single Field.

Layout (little-endian)::

    offset  size  content
    0       4     magic b"ABSQ"
    4       4     version (u32)
    8       4     n1 (u32)
    12      4     n2 (u32)
    16      8     half_width L (f64)
    24      4     payload kind (u32)
    28      4     reserved, zero
    32      8*n1*n2  float64 samples, row-major with x2 outer
"""

from __future__ import annotations

import enum
import struct
from pathlib import Path

import numpy as np

from .grid import Field, Grid, GridSpec

MAGIC = b"ABSQ"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdI4x")
assert _HEADER.size == 32


class PayloadKind(enum.IntEnum):
    GENERIC = 0
    VORTICITY = 1
    TEMPERATURE = 2
    TOTAL_TEMPERATURE = 3  # Theta = theta + x2


def write_field(path, f: Field, kind: PayloadKind = PayloadKind.GENERIC) -> None:
    g = f.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n1, g.n2, float(g.L), int(kind))
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_field(path, grid: Grid | None = None) -> tuple[Field, PayloadKind]:
    """Read a snapshot; reuses ``grid`` when it matches the header."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n1, n2, L, kind = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * n1 * n2
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    spec = GridSpec(n1=n1, n2=n2, half_width=L)
    if grid is None or grid.spec.n1 != n1 or grid.spec.n2 != n2 or grid.L != L:
        grid = Grid(spec)
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n2, n1)
    return Field(grid, values.astype(float)), PayloadKind(kind)


def total_temperature(theta: Field) -> Field:
    """Undo the hydrostatic shift: Theta = theta + x2."""
    _, X2 = theta.grid.mesh
    return Field(theta.grid, theta.values + X2)
