"""Paired-sample datasets emitted by the imaging front-end.

A dataset directory holds sample_NNNN_spectrum.mmt / sample_NNNN_gt.mmt
pairs plus labels.csv. Spectra arrive as (theta, phi, tx) float32 in
[0, 1] and become (1, tx, theta, phi) network volumes; depth images are
normalized to [0, 1] by the dataset-wide maximum (kept as ``scale``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .container import read_tensor


@dataclass
class PairedSamples:
    spectra: torch.Tensor  # (N, 1, n_tx, H, W)
    images: torch.Tensor  # (N, 1, 256, 256), normalized
    labels: torch.Tensor  # (N,) long
    class_names: list
    scale: float  # meters per unit in ``images``

    def __len__(self) -> int:
        return self.spectra.shape[0]


def load_pairs(directory) -> PairedSamples:
    directory = Path(directory)
    labels_file = directory / "labels.csv"
    if not labels_file.exists():
        raise FileNotFoundError(f"{directory}: no labels.csv")
    rows = labels_file.read_text().strip().splitlines()[1:]
    if not rows:
        raise ValueError(f"{directory}: empty dataset")

    spectra, images, labels, names = [], [], [], {}
    for row in rows:
        sid, label, name = row.split(",")
        sid, label = int(sid), int(label)
        spec, _ = read_tensor(directory / f"sample_{sid:04d}_spectrum.mmt")
        gt, _ = read_tensor(directory / f"sample_{sid:04d}_gt.mmt")
        spectra.append(np.transpose(spec, (2, 0, 1))[None])  # (1, tx, theta, phi)
        images.append(gt[None])
        labels.append(label)
        names[label] = name

    images = np.stack(images).astype(np.float32)
    scale = float(images.max())
    if scale > 0:
        images = images / scale
    else:
        scale = 1.0
    return PairedSamples(
        spectra=torch.from_numpy(np.stack(spectra).astype(np.float32)),
        images=torch.from_numpy(images),
        labels=torch.tensor(labels, dtype=torch.long),
        class_names=[names[k] for k in sorted(names)],
        scale=scale,
    )


def stratified_split(labels: torch.Tensor, test_fraction: float = 0.2, seed: int = 0):
    """Per-class index split; returns (train_idx, test_idx) tensors."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in torch.unique(labels):
        idx = torch.nonzero(labels == cls, as_tuple=True)[0].numpy()
        rng.shuffle(idx)
        n_test = max(1, int(round(len(idx) * test_fraction)))
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return torch.tensor(sorted(train)), torch.tensor(sorted(test))
