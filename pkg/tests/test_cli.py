import json
from pathlib import Path

import numpy as np
import pytest

from mmimaging import read_tensor, write_tensor
from mmimaging.cli import main

GEOMETRY = """
rows 6
cols 6
pitch 0.003
carrier_freq 60e9
missing 0,0 0,5 5,0 5,5
"""

SCENE = """
noise_power 1e-4
leakage (0.4+0.2j) (0.2-0.1j) (0.1+0.05j) (0.05+0j)
scatterer 1.5 0.0 0.0 (1+0j)
"""

EMPTY_SCENE = """
noise_power 1e-4
leakage (0.4+0.2j) (0.2-0.1j) (0.1+0.05j) (0.05+0j)
"""

PHANTOM_SCENE = """
noise_power 1e-4
leakage (0.3+0.1j) (0.15-0.05j) (0.07+0j) (0.03+0j)
ellipsoid 1.5 0.0 0.0 0.22 0.22 0.22
density 150
jitter_xyz 0.03 0.05 0.05
"""

FAST_CONFIG = """
grid_size 32
range_gate 30 44
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "geometry.cfg").write_text(GEOMETRY)
    (tmp_path / "scene.scene").write_text(SCENE)
    (tmp_path / "empty.scene").write_text(EMPTY_SCENE)
    (tmp_path / "music.cfg").write_text(FAST_CONFIG)
    return tmp_path


def tree_bytes(root: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_data_errors_exit_2(workdir, capsys):
    bad_scene = workdir / "bad.scene"
    bad_scene.write_text("scatterer one two three\n")
    rc = main([
        "simulate", str(bad_scene), str(workdir / "geometry.cfg"),
        "--frames", "1", "--out", str(workdir / "out"),
    ])
    assert rc == 2
    err = capsys.readouterr().err
    assert "line 1" in err


def test_simulate_writes_frames_and_manifest(workdir):
    out = workdir / "frames"
    rc = main([
        "simulate", str(workdir / "scene.scene"), str(workdir / "geometry.cfg"),
        "--frames", "10", "--seed", "5", "--out", str(out),
    ])
    assert rc == 0
    files = sorted(out.glob("frame_*.mmt"))
    assert len(files) == 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["outputs"]) == 10
    assert manifest["seed"] == 5
    data, header = read_tensor(files[0])
    assert header["dtype"] == "c64"
    assert header["shape"] == [32, 32, 64]


def test_simulate_empty_scene_round_trips_zero(workdir):
    empty_no_leak = workdir / "zero.scene"
    empty_no_leak.write_text("noise_power 0\n")
    out = workdir / "zero_frames"
    rc = main([
        "simulate", str(empty_no_leak), str(workdir / "geometry.cfg"),
        "--frames", "2", "--out", str(out),
    ])
    assert rc == 0
    for f in sorted(out.glob("frame_*.mmt")):
        data, _ = read_tensor(f)
        assert not data.any()


def test_simulate_deterministic(workdir):
    out1, out2 = workdir / "d1", workdir / "d2"
    argv = ["simulate", str(workdir / "scene.scene"), str(workdir / "geometry.cfg"),
            "--frames", "3", "--seed", "9"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert tree_bytes(out1) == tree_bytes(out2)


@pytest.fixture
def simulated(workdir):
    frames = workdir / "live"
    empty = workdir / "empty"
    main(["simulate", str(workdir / "scene.scene"), str(workdir / "geometry.cfg"),
          "--frames", "3", "--seed", "1", "--out", str(frames)])
    main(["simulate", str(workdir / "empty.scene"), str(workdir / "geometry.cfg"),
          "--frames", "3", "--seed", "2", "--out", str(empty)])
    return frames, empty


def test_spectrum_contract_and_determinism(workdir, simulated):
    frames, empty = simulated
    out1, out2 = workdir / "s1", workdir / "s2"
    argv = ["spectrum", str(frames), str(empty),
            "--geometry", str(workdir / "geometry.cfg"),
            "--config", str(workdir / "music.cfg")]
    assert main(argv + ["--out", str(out1)]) == 0
    data, header = read_tensor(out1 / "spectrum.mmt")
    assert header["shape"] == [32, 32, 32]
    assert header["dtype"] == "f32"
    assert float(data.min()) >= 0.0 and float(data.max()) <= 1.0
    previews = sorted(out1.glob("preview_tx*.png"))
    assert len(previews) == 32

    assert main(argv + ["--out", str(out2)]) == 0
    assert tree_bytes(out1) == tree_bytes(out2)


def test_spectrum_flag_overrides(workdir, simulated):
    frames, empty = simulated
    out = workdir / "s_flags"
    rc = main([
        "spectrum", str(frames), str(empty),
        "--geometry", str(workdir / "geometry.cfg"),
        "--config", str(workdir / "music.cfg"),
        "--grid-extent", "45", "--range-gate", "32", "40",
        "--order-mode", "fixed", "--order-value", "1",
        "--jts", "off", "--reduction", "depth",
        "--out", str(out),
    ])
    assert rc == 0
    _, header = read_tensor(out / "spectrum.mmt")
    cfg = header["meta"]["config"]
    assert cfg["grid_extent_deg"] == 45
    assert cfg["range_gate"] == [32, 40]
    assert cfg["order_mode"] == "fixed"
    assert cfg["jts"] is False
    assert cfg["reduction"] == "depth"


def test_metrics_identical_and_complementary(workdir, capsys):
    a = np.zeros((256, 256), dtype=np.float32)
    a[100:150, 80:180] = 1.0
    pa = workdir / "a.mmt"
    pb = workdir / "b.mmt"
    pc = workdir / "c.mmt"
    write_tensor(pa, a, dtype="f32")
    write_tensor(pb, a.copy(), dtype="f32")
    write_tensor(pc, 1.0 - a, dtype="f32")

    assert main(["metrics", str(pa), str(pb)]) == 0
    report = dict(
        line.split("=") for line in capsys.readouterr().out.strip().splitlines()
    )
    assert float(report["sd_percent"]) == 0.0
    assert float(report["ssim"]) == 1.0

    assert main(["metrics", str(pa), str(pc)]) == 0
    report = dict(
        line.split("=") for line in capsys.readouterr().out.strip().splitlines()
    )
    assert float(report["sd_percent"]) == 100.0


def test_metrics_shape_mismatch_is_data_error(workdir, capsys):
    pa = workdir / "m1.mmt"
    pb = workdir / "m2.mmt"
    write_tensor(pa, np.zeros((16, 16), dtype=np.float32), dtype="f32")
    write_tensor(pb, np.zeros((16, 17), dtype=np.float32), dtype="f32")
    assert main(["metrics", str(pa), str(pb)]) == 2


def test_metrics_rejects_non_image_containers(workdir, capsys):
    pa = workdir / "m3.mmt"
    pb = workdir / "m4.mmt"
    write_tensor(pa, np.zeros((4, 4, 2), dtype=np.complex64), dtype="c64")
    write_tensor(pb, np.zeros((4, 4, 2), dtype=np.complex64), dtype="c64")
    assert main(["metrics", str(pa), str(pb)]) == 2
    assert "f32" in capsys.readouterr().err


@pytest.fixture
def scene_templates(tmp_path):
    scenes = tmp_path / "scenes"
    scenes.mkdir()
    (scenes / "person_a.scene").write_text(PHANTOM_SCENE)
    (scenes / "person_b.scene").write_text(
        PHANTOM_SCENE.replace("0.22 0.22 0.22", "0.12 0.30 0.45")
    )
    (scenes / "person_c.scene").write_text(
        PHANTOM_SCENE.replace("0.22 0.22 0.22", "0.30 0.15 0.20")
    )
    return scenes


def dataset_args(scenes, out, count=6, seed=3, augment=None):
    argv = [
        "dataset", "--scenes", str(scenes), "--count", str(count),
        "--seed", str(seed), "--frames", "2", "--empty-frames", "2",
        "--out", str(out),
    ]
    if augment:
        argv += ["--augment", augment]
    return argv


def test_dataset_pairs_and_labels(tmp_path, scene_templates):
    out = tmp_path / "ds"
    cfg = tmp_path / "music.cfg"
    cfg.write_text(FAST_CONFIG)
    rc = main(dataset_args(scene_templates, out) + ["--config", str(cfg)])
    assert rc == 0
    spectra = sorted(out.glob("sample_*_spectrum.mmt"))
    gts = sorted(out.glob("sample_*_gt.mmt"))
    assert len(spectra) == 6 and len(gts) == 6
    labels = (out / "labels.csv").read_text().strip().splitlines()
    assert labels[0] == "sample_id,label,class_name"
    counts = {}
    for row in labels[1:]:
        sid, label, name = row.split(",")
        counts[label] = counts.get(label, 0) + 1
        _, header_s = read_tensor(out / f"sample_{int(sid):04d}_spectrum.mmt")
        _, header_g = read_tensor(out / f"sample_{int(sid):04d}_gt.mmt")
        assert header_s["meta"]["sample_id"] == int(sid)
        assert header_g["meta"]["sample_id"] == int(sid)
        assert header_g["meta"]["label"] == int(label)
    assert counts == {"0": 2, "1": 2, "2": 2}  # round-robin over 3 classes
    data, header = read_tensor(spectra[0])
    assert header["shape"] == [32, 32, 32]
    gt, _ = read_tensor(gts[0])
    assert gt.shape == (256, 256)


def test_dataset_flip_involution(tmp_path, scene_templates):
    cfg = tmp_path / "music.cfg"
    cfg.write_text(FAST_CONFIG)
    plain = tmp_path / "plain"
    flipped = tmp_path / "flipped"
    assert main(dataset_args(scene_templates, plain, count=4, seed=11)
                + ["--config", str(cfg)]) == 0
    assert main(dataset_args(scene_templates, flipped, count=4, seed=11, augment="flip")
                + ["--config", str(cfg)]) == 0
    saw_flip = 0
    for i in range(4):
        gt_f, header = read_tensor(flipped / f"sample_{i:04d}_gt.mmt")
        gt_p, _ = read_tensor(plain / f"sample_{i:04d}_gt.mmt")
        spec_f, _ = read_tensor(flipped / f"sample_{i:04d}_spectrum.mmt")
        spec_p, _ = read_tensor(plain / f"sample_{i:04d}_spectrum.mmt")
        if header["meta"]["augment"]["flip"]:
            saw_flip += 1
            assert np.array_equal(gt_f, gt_p[:, ::-1])
            assert np.array_equal(spec_f, spec_p[:, ::-1, :])
        else:
            assert np.array_equal(gt_f, gt_p)
            assert np.array_equal(spec_f, spec_p)
    assert saw_flip >= 1


def test_dataset_requires_scenes(tmp_path, capsys):
    empty_dir = tmp_path / "none"
    empty_dir.mkdir()
    rc = main(dataset_args(empty_dir, tmp_path / "out"))
    assert rc == 2
