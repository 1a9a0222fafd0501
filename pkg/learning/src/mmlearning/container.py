"""Reader/writer for the cross-component tensor container.

The byte layout is the contract with the imaging front-end: magic "MMID",
u16 version, u32 header length (all little-endian), a UTF-8 JSON header
{dtype, shape, axis_names, meta}, then the raw row-major payload ("f32"
float32, "c64" complex64 as interleaved re/im float32 pairs). This module
is deliberately self-contained; the learning stage talks to the imaging
toolkit only through these files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"MMID"
VERSION = 1

_DTYPES = {"c64": np.dtype("<c8"), "f32": np.dtype("<f4")}


class ContainerError(ValueError):
    pass


def read_tensor(path):
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:4] != MAGIC:
        raise ContainerError(f"{path}: not a tensor container")
    version = int.from_bytes(raw[4:6], "little")
    if version > VERSION:
        raise ContainerError(f"{path}: unsupported version {version}")
    header_len = int.from_bytes(raw[6:10], "little")
    header = json.loads(raw[10 : 10 + header_len].decode("utf-8"))
    dtype = _DTYPES.get(header.get("dtype"))
    if dtype is None:
        raise ContainerError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    shape = tuple(header.get("shape", ()))
    payload = raw[10 + header_len :]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(payload) != expected:
        raise ContainerError(f"{path}: payload length mismatch")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy(), header


def write_tensor(path, array: np.ndarray, dtype: str, axis_names=None, meta=None) -> None:
    if dtype not in _DTYPES:
        raise ContainerError(f"unsupported dtype {dtype!r}")
    arr = np.ascontiguousarray(np.asarray(array).astype(_DTYPES[dtype]))
    header = {
        "dtype": dtype,
        "shape": list(arr.shape),
        "axis_names": list(axis_names) if axis_names else [f"axis{i}" for i in range(arr.ndim)],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(2, "little"))
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(arr.tobytes())
