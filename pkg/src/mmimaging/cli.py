"""Command-line front-end.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, mismatched
dimensions, parse failures). All commands honor --seed for bit-exact
reproducibility; every output directory gets a manifest.json recording
the config snapshot and input/output hashes.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .background import EmptyCirSet
from .container import read_tensor, write_manifest, write_tensor
from .geometry import ArrayGeometry, load_geometry
from .metrics import silhouette_difference, ssim, to_mask
from .music import MusicConfig, build_spectrum_tensor, parse_music_config
from .scene import CirFrame, load_scene, realize, render_ground_truth, simulate_frames


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; data problems exit 2 (see module docstring)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmimaging", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize CIR frames for a scene")
    p.add_argument("scene", help="scene description file")
    p.add_argument("geometry", help="array geometry file")
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--taps", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deposition", choices=["nearest", "sinc"], default="nearest")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="MUSIC spectrum tensor from CIR frames")
    p.add_argument("frames_dir", help="directory of live frame containers")
    p.add_argument("empty_dir", help="directory of empty-room frame containers")
    p.add_argument("--geometry", default=None, help="array geometry file")
    p.add_argument("--config", default=None, help="estimator config file")
    p.add_argument("--grid-extent", type=float, default=None, metavar="DEG")
    p.add_argument("--range-gate", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--order-mode", default=None,
                   choices=["fixed", "eigen-gap", "energy-threshold"])
    p.add_argument("--order-value", type=int, default=None)
    p.add_argument("--jts", choices=["on", "off"], default=None)
    p.add_argument("--reduction", choices=["max", "depth"], default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("metrics", help="silhouette difference and SSIM of two images")
    p.add_argument("img_a")
    p.add_argument("img_b")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--data-range", type=float, default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("dataset", help="paired (spectrum, ground truth, label) samples")
    p.add_argument("--scenes", required=True, help="directory of scene templates")
    p.add_argument("--count", type=int, required=True, help="total number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--empty-frames", type=int, default=6)
    p.add_argument("--taps", type=int, default=64)
    p.add_argument("--geometry", default=None)
    p.add_argument("--config", default=None, help="estimator config file")
    p.add_argument("--augment", default="", help="comma list of flip,shift,rotate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (ValueError, OSError) as exc:
        print(f"mmimaging: error: {exc}", file=sys.stderr)
        return 2


def _load_geometry_arg(path) -> ArrayGeometry:
    return load_geometry(path) if path else ArrayGeometry()


def _resolve_music_config(args) -> MusicConfig:
    cfg = parse_music_config(Path(args.config).read_text()) if args.config else MusicConfig()
    if args.grid_extent is not None:
        cfg.grid_extent_deg = args.grid_extent
    if args.range_gate is not None:
        cfg.range_gate = tuple(args.range_gate)
    if args.order_mode is not None:
        cfg.order_mode = args.order_mode
    if args.order_value is not None:
        cfg.order_value = args.order_value
    if args.jts is not None:
        cfg.jts = args.jts == "on"
    if args.reduction is not None:
        cfg.reduction = args.reduction
    cfg.__post_init__()
    return cfg


def _write_frames(frames, out_dir: Path, seed: int) -> list:
    paths = []
    for i, frame in enumerate(frames):
        path = out_dir / f"frame_{i:04d}.mmt"
        write_tensor(
            path,
            frame.data,
            dtype="c64",
            axis_names=["tx", "rx", "tap"],
            meta={
                "frame_index": i,
                "timestamp": frame.timestamp,
                "tap_spacing": frame.tap_spacing,
                "seed": seed,
            },
        )
        paths.append(path)
    return paths


def _read_frames(dir_path) -> list:
    dir_path = Path(dir_path)
    files = sorted(dir_path.glob("frame_*.mmt"))
    if not files:
        raise ValueError(f"{dir_path}: no frame_*.mmt files")
    frames = []
    for f in files:
        data, header = read_tensor(f)
        if header["dtype"] != "c64" or len(header["shape"]) != 3:
            raise ValueError(f"{f}: not a CIR frame container")
        meta = header.get("meta", {})
        frames.append(
            CirFrame(
                data.astype(complex),
                tap_spacing=float(meta.get("tap_spacing", 0.28e-9)),
                timestamp=float(meta.get("timestamp", 0.0)),
            )
        )
    return frames


def cmd_simulate(args) -> int:
    template = load_scene(args.scene)
    geom = load_geometry(args.geometry)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    realize_seed, frames_seed = np.random.SeedSequence(args.seed).spawn(2)
    scene, _ = realize(template, realize_seed)
    frames = simulate_frames(
        scene, geom, args.taps, args.frames, seed=frames_seed, deposition=args.deposition
    )
    paths = _write_frames(frames, out_dir, args.seed)
    write_manifest(
        out_dir / "manifest.json",
        command="simulate",
        config={
            "frames": args.frames,
            "taps": args.taps,
            "deposition": args.deposition,
        },
        seed=args.seed,
        inputs=[args.scene, args.geometry],
        outputs=paths,
    )
    print(f"wrote {len(paths)} frames to {out_dir}")
    return 0


def cmd_spectrum(args) -> int:
    geom = _load_geometry_arg(args.geometry)
    cfg = _resolve_music_config(args)
    frames = _read_frames(args.frames_dir)
    empty = EmptyCirSet(_read_frames(args.empty_dir))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tensor = build_spectrum_tensor(frames, empty, geom, cfg)
    spectrum_path = out_dir / "spectrum.mmt"
    write_tensor(
        spectrum_path,
        tensor.values.astype(np.float32),
        dtype="f32",
        axis_names=["theta", "phi", "tx"],
        meta={"config": dataclasses.asdict(cfg)},
    )
    outputs = [spectrum_path]
    for t in range(tensor.n_tx):
        img = np.flipud((tensor.values[:, :, t] * 255.0).round().astype(np.uint8))
        preview = out_dir / f"preview_tx{t:02d}.png"
        Image.fromarray(img, mode="L").save(preview)
        outputs.append(preview)
    inputs = sorted(Path(args.frames_dir).glob("frame_*.mmt")) + sorted(
        Path(args.empty_dir).glob("frame_*.mmt")
    )
    if args.geometry:
        inputs.append(Path(args.geometry))
    write_manifest(
        out_dir / "manifest.json",
        command="spectrum",
        config=dataclasses.asdict(cfg),
        seed=None,
        inputs=inputs,
        outputs=outputs,
    )
    print(f"wrote {spectrum_path}")
    return 0


def cmd_metrics(args) -> int:
    a, header_a = read_tensor(args.img_a)
    b, header_b = read_tensor(args.img_b)
    for path, header in ((args.img_a, header_a), (args.img_b, header_b)):
        if header["dtype"] != "f32" or len(header["shape"]) != 2:
            raise ValueError(f"{path}: metrics expects 2-D f32 image containers")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(
            f"image shapes differ: {args.img_a} is {a.shape}, {args.img_b} is {b.shape}"
        )
    sd = silhouette_difference(to_mask(a, args.threshold), to_mask(b, args.threshold))
    data_range = args.data_range
    if data_range is None:
        spread = max(a.max(), b.max()) - min(a.min(), b.min())
        data_range = spread if spread > 0 else 1.0
    value = ssim(a, b, data_range=data_range)
    print(f"sd_percent={sd}")
    print(f"ssim={value}")
    return 0


def _augment_params(modes, rng) -> dict:
    params = {"flip": False, "shift": [0, 0], "rotate_deg": 0.0}
    if "flip" in modes:
        params["flip"] = bool(rng.random() < 0.5)
    if "shift" in modes:
        params["shift"] = [int(rng.integers(-4, 5)), int(rng.integers(-4, 5))]
    if "rotate" in modes:
        params["rotate_deg"] = float(rng.uniform(-10.0, 10.0))
    return params


def _apply_augment(spectrum: np.ndarray, gt: np.ndarray, params: dict):
    """Apply the same geometric transform to tensor slices and ground truth.

    The ground truth grid is 2x the spectrum grid, so pixel shifts double.
    """
    from scipy import ndimage

    if params["flip"]:
        spectrum = np.flip(spectrum, axis=1).copy()
        gt = np.flip(gt, axis=1).copy()
    di, dj = params["shift"]
    if di or dj:
        spectrum = ndimage.shift(spectrum, (di, dj, 0), order=1, cval=0.0)
        gt = ndimage.shift(gt, (2 * di, 2 * dj), order=1, cval=0.0)
    angle = params["rotate_deg"]
    if angle:
        spectrum = ndimage.rotate(
            spectrum, angle, axes=(1, 0), reshape=False, order=1, cval=0.0
        )
        gt = ndimage.rotate(gt, angle, axes=(1, 0), reshape=False, order=1, cval=0.0)
        spectrum = np.clip(spectrum, 0.0, 1.0)
        gt = np.maximum(gt, 0.0)
    return spectrum, gt


def cmd_dataset(args) -> int:
    scene_dir = Path(args.scenes)
    templates = sorted(scene_dir.glob("*.scene"))
    if not templates:
        raise ValueError(f"{scene_dir}: no *.scene templates")
    if args.count < 1:
        raise ValueError("count must be positive")
    geom = _load_geometry_arg(args.geometry)
    cfg = parse_music_config(Path(args.config).read_text()) if args.config else MusicConfig()
    modes = {m.strip() for m in args.augment.split(",") if m.strip()}
    unknown = modes - {"flip", "shift", "rotate"}
    if unknown:
        raise ValueError(f"unknown augmentation modes: {sorted(unknown)}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = [(_stem_label(p)) for p in templates]

    outputs = []
    label_rows = ["sample_id,label,class_name"]
    children = np.random.SeedSequence(args.seed).spawn(args.count)
    for i in range(args.count):
        label = i % len(loaded)
        name, template = loaded[label]
        scene_seed, frames_seed, empty_seed, aug_seed = children[i].spawn(4)
        scene, phantom = realize(template, scene_seed)
        frames = simulate_frames(scene, geom, args.taps, args.frames, seed=frames_seed)
        empty = EmptyCirSet(
            simulate_frames(
                scene.without_targets(), geom, args.taps, args.empty_frames, seed=empty_seed
            )
        )
        tensor = build_spectrum_tensor(frames, empty, geom, cfg)
        if phantom is not None:
            gt = render_ground_truth(phantom, geom, extent_deg=cfg.grid_extent_deg)
        else:
            gt = np.zeros((256, 256))

        params = _augment_params(modes, np.random.default_rng(aug_seed))
        spec_values, gt = _apply_augment(tensor.values, gt, params)

        meta = {"sample_id": i, "label": label, "class_name": name, "augment": params}
        spec_path = out_dir / f"sample_{i:04d}_spectrum.mmt"
        gt_path = out_dir / f"sample_{i:04d}_gt.mmt"
        write_tensor(
            spec_path,
            spec_values.astype(np.float32),
            dtype="f32",
            axis_names=["theta", "phi", "tx"],
            meta=meta,
        )
        write_tensor(
            gt_path,
            gt.astype(np.float32),
            dtype="f32",
            axis_names=["theta", "phi"],
            meta=meta,
        )
        outputs.extend([spec_path, gt_path])
        label_rows.append(f"{i},{label},{name}")

    labels_path = out_dir / "labels.csv"
    labels_path.write_text("\n".join(label_rows) + "\n")
    outputs.append(labels_path)
    write_manifest(
        out_dir / "manifest.json",
        command="dataset",
        config={
            "count": args.count,
            "frames": args.frames,
            "empty_frames": args.empty_frames,
            "taps": args.taps,
            "augment": sorted(modes),
            "music": dataclasses.asdict(cfg),
        },
        seed=args.seed,
        inputs=templates,
        outputs=outputs,
    )
    print(f"wrote {args.count} samples to {out_dir}")
    return 0


def _stem_label(path: Path):
    template = load_scene(path)
    return template.label or path.stem, template


if __name__ == "__main__":
    sys.exit(main())
