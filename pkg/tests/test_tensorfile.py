"""Binary tensor container round-trips and failure modes."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from cutlabel import DataError
from cutlabel.tensorstore import read_tensor, write_tensor


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    for shape in [(3,), (4, 5), (2, 3, 4), (1, 1, 1, 2)]:
        arr = rng.standard_normal(shape).astype(np.float32)
        path = tmp_path / "t.tf"
        write_tensor(path, arr)
        back = read_tensor(path)
        assert back.dtype == np.float32
        assert back.shape == arr.shape
        assert arr.tobytes() == back.tobytes()


def test_round_trip_preserves_special_values(tmp_path):
    arr = np.array([0.0, -0.0, 1e-38, 3.4e38], dtype=np.float32)
    path = tmp_path / "s.tf"
    write_tensor(path, arr)
    assert read_tensor(path).tobytes() == arr.tobytes()


def test_header_layout(tmp_path):
    arr = np.zeros((2, 3), dtype=np.float32)
    path = tmp_path / "h.tf"
    write_tensor(path, arr)
    raw = path.read_bytes()
    assert raw[:4] == b"RLTF"
    version, dtype_code, ndim = struct.unpack_from("<IBB", raw, 4)
    assert (version, dtype_code, ndim) == (1, 1, 2)
    assert struct.unpack_from("<2Q", raw, 10) == (2, 3)
    assert len(raw) == 10 + 16 + 4 * 6


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.tf"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(DataError, match="magic"):
        read_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    arr = np.ones((4, 4), dtype=np.float32)
    path = tmp_path / "t.tf"
    write_tensor(path, arr)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(DataError, match="payload"):
        read_tensor(path)


def test_unknown_dtype_rejected(tmp_path):
    path = tmp_path / "d.tf"
    header = b"RLTF" + struct.pack("<IBB", 1, 9, 1) + struct.pack("<Q", 1) + b"\x00" * 4
    path.write_bytes(header)
    with pytest.raises(DataError, match="dtype"):
        read_tensor(path)
