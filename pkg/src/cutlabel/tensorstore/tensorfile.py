"""Flat binary container for float32 arrays.

Layout, all little-endian: 4-byte magic ``RLTF``, u32 format version, u8 dtype
code (only float32 is defined), u8 rank, then rank u64 extents, then the
row-major payload. Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from cutlabel.errors import DataError

MAGIC = b"RLTF"
VERSION = 1
_DTYPE_F32 = 1
_MAX_RANK = 8


def write_tensor(path: str | Path, array: np.ndarray) -> None:
    """Write ``array`` to ``path``, converting to float32 if needed."""
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.ndim == 0 or arr.ndim > _MAX_RANK:
        raise ValueError(f"rank {arr.ndim} outside supported range 1..{_MAX_RANK}")
    header = MAGIC + struct.pack("<IBB", VERSION, _DTYPE_F32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a float32 array written by :func:`write_tensor`.

    Raises :class:`DataError` on a bad magic, unknown dtype code, or a
    truncated payload.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 10:
        raise DataError(f"{path}: truncated header")
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}")
    version, dtype_code, ndim = struct.unpack_from("<IBB", raw, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    if dtype_code != _DTYPE_F32:
        raise DataError(f"{path}: unknown dtype code {dtype_code}")
    if ndim == 0 or ndim > _MAX_RANK:
        raise DataError(f"{path}: bad rank {ndim}")
    offset = 10
    if len(raw) < offset + 8 * ndim:
        raise DataError(f"{path}: truncated shape block")
    shape = struct.unpack_from(f"<{ndim}Q", raw, offset)
    offset += 8 * ndim
    count = int(np.prod(shape, dtype=np.int64)) if shape else 0
    expected = offset + 4 * count
    if len(raw) != expected:
        raise DataError(
            f"{path}: payload size {len(raw) - offset} does not match shape {shape}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=offset, count=count)
    return data.reshape(shape).astype(np.float32, copy=True)
