"""Portable tensor container and run manifests.

The container is the cross-component wire format: a 4-byte magic "MMID",
a little-endian u16 version, a little-endian u32 header length, a UTF-8
JSON header {dtype, shape, axis_names, meta}, then the raw little-endian
row-major payload. dtype "c64" stores complex values as interleaved
(re, im) float32 pairs; "f32" stores float32. Headers are serialized
with sorted keys so identical writes are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

MAGIC = b"MMID"
VERSION = 1

_DTYPES = {"c64": np.dtype("<c8"), "f32": np.dtype("<f4")}


class ContainerError(ValueError):
    """Malformed container file or write request."""


def write_tensor(path, array: np.ndarray, dtype: str, axis_names=None, meta=None) -> None:
    """Write an array to a container file.

    The array is cast to the container dtype ("c64" or "f32"); pass data
    already in that precision for a lossless round-trip.
    """
    if dtype not in _DTYPES:
        raise ContainerError(f"unsupported dtype {dtype!r}")
    arr = np.asarray(array)
    if dtype == "f32" and np.iscomplexobj(arr):
        raise ContainerError("cannot store complex data as f32")
    arr = np.ascontiguousarray(arr.astype(_DTYPES[dtype]))
    axis_names = list(axis_names) if axis_names is not None else [
        f"axis{i}" for i in range(arr.ndim)
    ]
    if len(axis_names) != arr.ndim:
        raise ContainerError("axis_names length must match array rank")
    header = {
        "dtype": dtype,
        "shape": list(arr.shape),
        "axis_names": axis_names,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(2, "little"))
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(arr.tobytes())


def read_tensor(path):
    """Read a container file; returns (array, header dict)."""
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:4] != MAGIC:
        raise ContainerError(f"{path}: not a tensor container")
    version = int.from_bytes(raw[4:6], "little")
    if version > VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    header_len = int.from_bytes(raw[6:10], "little")
    if len(raw) < 10 + header_len:
        raise ContainerError(f"{path}: truncated header")
    try:
        header = json.loads(raw[10 : 10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"{path}: bad header") from exc
    dtype = header.get("dtype")
    if dtype not in _DTYPES:
        raise ContainerError(f"{path}: unsupported dtype {dtype!r}")
    shape = tuple(header.get("shape", ()))
    payload = raw[10 + header_len :]
    expected = int(np.prod(shape, dtype=np.int64)) * _DTYPES[dtype].itemsize
    if len(payload) != expected:
        raise ContainerError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    array = np.frombuffer(payload, dtype=_DTYPES[dtype]).reshape(shape)
    return array.copy(), header


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, config: dict, seed, inputs, outputs) -> dict:
    """Record a run: tool version, config snapshot, seed, input/output hashes.

    Paths in ``inputs``/``outputs`` are hashed and stored relative to the
    manifest's directory when possible, so output trees stay relocatable
    (and byte-identical across reruns).
    """
    from . import __version__

    base = Path(path).parent

    def _entry(p):
        p = Path(p)
        try:
            key = p.relative_to(base).as_posix()
        except ValueError:
            key = p.as_posix()
        return key, sha256_file(p)

    manifest = {
        "tool": "mmimaging",
        "tool_version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": dict(_entry(p) for p in inputs),
        "outputs": dict(_entry(p) for p in outputs),
    }
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def verify_manifest(path) -> list:
    """Re-hash the manifest's outputs; returns a list of mismatched paths."""
    manifest = json.loads(Path(path).read_text())
    base = Path(path).parent
    bad = []
    for rel, digest in manifest.get("outputs", {}).items():
        p = base / rel
        if not p.exists() or sha256_file(p) != digest:
            bad.append(rel)
    return bad
