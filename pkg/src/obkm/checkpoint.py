"""Binary checkpoints of the stress state.

Layout (little-endian throughout)::

    magic    4 bytes   b"OBKM"
    version  uint32    1
    n        uint32
    length, t, nu_s, nu_p, lambda   5 x float64
    payload  6 x n^3 float64, components 11, 22, 33, 12, 13, 23,
             each stored x-fastest

``lambda`` may be ``inf``.  Reads are all-or-nothing.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evolution import PhysicalParams
from .grid import Grid, SymTensorField

MAGIC = b"OBKM"
VERSION = 1
_HEADER = struct.Struct("<4sII5d")
HEADER_SIZE = _HEADER.size


class CheckpointError(ValueError):
    """Raised for any malformed checkpoint file."""


@dataclass(frozen=True)
class Checkpoint:
    sigma: SymTensorField
    t: float
    params: PhysicalParams


def payload_size(n: int) -> int:
    return 6 * n**3 * 8


def write_checkpoint(sigma: SymTensorField, t: float, params: PhysicalParams, path: str | Path) -> None:
    """Write atomically (temporary file, then rename)."""
    grid = sigma.grid
    header = _HEADER.pack(
        MAGIC, VERSION, grid.n, grid.length, float(t), params.nu_s, params.nu_p, params.lam
    )
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        # x-fastest within each component is Fortran order of the (x, y, z) block
        for c in range(6):
            fh.write(np.ravel(sigma.values[c], order="F").astype("<f8").tobytes())
    os.replace(tmp, path)


def read_checkpoint(path: str | Path, kelvin_voigt: bool = False) -> Checkpoint:
    """Read and validate a checkpoint.

    Raises
    ------
    CheckpointError
        Bad magic, unsupported version, or a payload whose byte count differs
        from ``6 n^3 8``.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise CheckpointError(
            f"truncated header: expected at least {HEADER_SIZE} bytes, got {len(data)}"
        )
    magic, version, n, length, t, nu_s, nu_p, lam = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}, expected {VERSION}")
    expected = payload_size(n)
    actual = len(data) - HEADER_SIZE
    if actual != expected:
        raise CheckpointError(f"payload size mismatch: expected {expected} bytes, got {actual}")
    try:
        grid = Grid(n, length)
        params = PhysicalParams(nu_s, nu_p, lam, kelvin_voigt and np.isinf(lam))
    except ValueError as exc:
        raise CheckpointError(f"invalid header values: {exc}") from exc
    flat = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE)
    values = np.stack([flat[c * n**3 : (c + 1) * n**3].reshape((n, n, n), order="F") for c in range(6)])
    return Checkpoint(SymTensorField(grid, values.astype(np.float64)), float(t), params)
