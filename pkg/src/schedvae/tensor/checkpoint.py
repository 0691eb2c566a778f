"""Flat binary checkpoints of named tensors.

Layout (all little-endian)::

    magic b"SVCKPT\\0\\0" | u32 version | u32 meta length | meta (utf-8)
    u32 tensor count | per tensor: u16 name length, name, u8 ndim, u32 dims...
    payload: float32 data of each tensor in table order
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SVCKPT\0\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save(path: "str | os.PathLike", tensors: dict[str, np.ndarray], meta: str = "") -> None:
    head = bytearray(MAGIC)
    meta_b = meta.encode()
    head += struct.pack("<II", VERSION, len(meta_b)) + meta_b
    head += struct.pack("<I", len(tensors))
    payload = bytearray()
    for name, arr in tensors.items():
        nb = name.encode()
        arr = np.asarray(arr)
        head += struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim)
        head += struct.pack(f"<{arr.ndim}I", *arr.shape)
        payload += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(head + payload))


def load(path: "str | os.PathLike") -> tuple[dict[str, np.ndarray], str]:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint")
    pos = 8
    version, meta_len = struct.unpack_from("<II", buf, pos)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos += 8
    meta = buf[pos : pos + meta_len].decode()
    pos += meta_len
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    table = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos : pos + nlen].decode()
        pos += nlen
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        table.append((name, shape))
    out = {}
    for name, shape in table:
        n = int(np.prod(shape, dtype=np.int64))
        out[name] = np.frombuffer(buf, dtype="<f4", count=n, offset=pos).reshape(shape).copy()
        pos += 4 * n
    if pos != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - pos} trailing bytes")
    return out, meta
