import math
import struct

import numpy as np
import pytest

from obkm.checkpoint import (
    HEADER_SIZE,
    MAGIC,
    CheckpointError,
    payload_size,
    read_checkpoint,
    write_checkpoint,
)
from obkm.evolution import PhysicalParams
from obkm.grid import Grid, SymTensorField

from conftest import random_sym


@pytest.fixture
def saved(tmp_path, grid16):
    s = random_sym(grid16, 11)
    p = PhysicalParams(nu_s=0.7, nu_p=0.3, lam=2.5)
    path = tmp_path / "s.ckpt"
    write_checkpoint(s, 1.25, p, path)
    return s, p, path


def test_round_trip_bit_exact(saved):
    s, p, path = saved
    ck = read_checkpoint(path)
    assert ck.sigma.values.tobytes() == s.values.tobytes()
    assert ck.t == 1.25 and ck.params == p
    assert ck.sigma.grid == s.grid


def test_rewrite_is_byte_identical(saved, tmp_path):
    s, p, path = saved
    ck = read_checkpoint(path)
    again = tmp_path / "again.ckpt"
    write_checkpoint(ck.sigma, ck.t, ck.params, again)
    assert again.read_bytes() == path.read_bytes()


def test_file_size(saved, grid16):
    _, _, path = saved
    assert path.stat().st_size == HEADER_SIZE + payload_size(16) == HEADER_SIZE + 6 * 16**3 * 8


def test_layout_x_fastest(tmp_path):
    g = Grid(8, 3.0)
    v = np.zeros((6, 8, 8, 8))
    v[0, 1, 0, 0] = 7.0  # second x point of the first component
    v[5, 0, 0, 1] = -2.0
    path = tmp_path / "l.ckpt"
    write_checkpoint(SymTensorField(g, v), 0.0, PhysicalParams(), path)
    data = path.read_bytes()
    assert data[:4] == MAGIC
    flat = np.frombuffer(data, "<f8", offset=HEADER_SIZE)
    assert flat[1] == 7.0
    assert flat[5 * 512 + 64] == -2.0


def test_infinite_lambda(tmp_path, grid16):
    path = tmp_path / "inf.ckpt"
    write_checkpoint(SymTensorField.zeros(grid16), 0.0, PhysicalParams(lam=math.inf), path)
    assert math.isinf(read_checkpoint(path).params.lam)
    assert read_checkpoint(path, kelvin_voigt=True).params.kelvin_voigt


def test_truncated_payload(saved):
    _, _, path = saved
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    expected = payload_size(16)
    with pytest.raises(CheckpointError, match=f"expected {expected} bytes, got {expected - 8}"):
        read_checkpoint(path)


def test_trailing_bytes(saved):
    _, _, path = saved
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(CheckpointError, match="payload size"):
        read_checkpoint(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "h.ckpt"
    path.write_bytes(MAGIC + b"\x01")
    with pytest.raises(CheckpointError, match="truncated header"):
        read_checkpoint(path)


def test_version_mismatch(saved):
    _, _, path = saved
    data = bytearray(path.read_bytes())
    data[4:8] = struct.pack("<I", 2)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version 2"):
        read_checkpoint(path)


def test_bad_magic(saved):
    _, _, path = saved
    data = bytearray(path.read_bytes())
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="magic"):
        read_checkpoint(path)


def test_invalid_header_values(saved):
    _, _, path = saved
    data = bytearray(path.read_bytes())
    # nu_s lives right after magic, version, n, length and t
    struct.pack_into("<d", data, 4 + 4 + 4 + 8 + 8, -1.0)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="nu_s"):
        read_checkpoint(path)


def test_no_temporary_left_behind(saved):
    _, _, path = saved
    assert sorted(p.name for p in path.parent.iterdir()) == ["s.ckpt"]
