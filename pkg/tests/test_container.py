import json

import numpy as np
import pytest

from mmimaging import (
    ContainerError,
    read_tensor,
    verify_manifest,
    write_manifest,
    write_tensor,
)


def test_round_trip_f32(tmp_path):
    path = tmp_path / "a.mmt"
    data = np.random.default_rng(0).random((7, 5)).astype(np.float32)
    write_tensor(path, data, dtype="f32", axis_names=["row", "col"], meta={"k": 1})
    back, header = read_tensor(path)
    assert np.array_equal(back, data)
    assert back.dtype == np.dtype("<f4")
    assert header["shape"] == [7, 5]
    assert header["axis_names"] == ["row", "col"]
    assert header["meta"] == {"k": 1}


def test_round_trip_c64(tmp_path):
    path = tmp_path / "b.mmt"
    rng = np.random.default_rng(1)
    data = (rng.standard_normal((3, 4, 6)) + 1j * rng.standard_normal((3, 4, 6))).astype(
        np.complex64
    )
    write_tensor(path, data, dtype="c64", axis_names=["tx", "rx", "tap"])
    back, header = read_tensor(path)
    assert np.array_equal(back, data)
    assert header["dtype"] == "c64"


def test_layout_bytes(tmp_path):
    path = tmp_path / "c.mmt"
    write_tensor(path, np.array([1.0, 2.0], dtype=np.float32), dtype="f32")
    raw = path.read_bytes()
    assert raw[:4] == b"MMID"
    assert int.from_bytes(raw[4:6], "little") == 1
    header_len = int.from_bytes(raw[6:10], "little")
    header = json.loads(raw[10 : 10 + header_len])
    assert header["dtype"] == "f32"
    payload = raw[10 + header_len :]
    assert payload == np.array([1.0, 2.0], dtype="<f4").tobytes()


def test_same_write_is_byte_identical(tmp_path):
    a, b = tmp_path / "x1.mmt", tmp_path / "x2.mmt"
    data = np.arange(12, dtype=np.float32).reshape(3, 4)
    write_tensor(a, data, dtype="f32", meta={"z": 2, "a": 1})
    write_tensor(b, data, dtype="f32", meta={"a": 1, "z": 2})
    assert a.read_bytes() == b.read_bytes()


def test_read_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.mmt"
    bad.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ContainerError, match="not a tensor container"):
        read_tensor(bad)

    good = tmp_path / "good.mmt"
    write_tensor(good, np.zeros(4, dtype=np.float32), dtype="f32")
    truncated = tmp_path / "trunc.mmt"
    truncated.write_bytes(good.read_bytes()[:-2])
    with pytest.raises(ContainerError, match="payload"):
        read_tensor(truncated)


def test_write_rejects_bad_requests(tmp_path):
    with pytest.raises(ContainerError):
        write_tensor(tmp_path / "x.mmt", np.zeros(3), dtype="f64")
    with pytest.raises(ContainerError):
        write_tensor(tmp_path / "x.mmt", np.zeros(3, complex), dtype="f32")
    with pytest.raises(ContainerError):
        write_tensor(tmp_path / "x.mmt", np.zeros((2, 2)), dtype="f32", axis_names=["a"])


def test_manifest_verification_detects_mutation(tmp_path):
    out = tmp_path / "out.mmt"
    write_tensor(out, np.ones(8, dtype=np.float32), dtype="f32")
    manifest = tmp_path / "manifest.json"
    write_manifest(manifest, command="test", config={}, seed=1, inputs=[], outputs=[out])
    assert verify_manifest(manifest) == []
    raw = bytearray(out.read_bytes())
    raw[-1] ^= 0xFF
    out.write_bytes(bytes(raw))
    assert verify_manifest(manifest) == ["out.mmt"]
