"""Identity classifier: four convolution+max-pool blocks, two fully
connected layers, log-softmax output."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn


@dataclass
class ClassifierConfig:
    n_classes: int = 3
    widths: tuple = (16, 32, 64, 128)
    hidden: int = 128
    epochs: int = 100
    lr: float = 1e-4
    momentum: float = 0.9
    decay_every: int = 10
    decay_factor: float = 0.1
    batch_size: int = 16
    seed: int = 0


def classifier_lr(epoch: int, base: float = 1e-4, decay_every: int = 10,
                  factor: float = 0.1) -> float:
    """Stepped schedule for 1-based epochs: decayed by ``factor`` after
    every ``decay_every`` epochs (epoch 25 at defaults: 1e-4 * 0.1^2)."""
    if epoch < 1:
        raise ValueError("epochs are 1-based")
    return base * factor ** ((epoch - 1) // decay_every)


class IdentityClassifier(nn.Module):
    def __init__(self, cfg: ClassifierConfig | None = None):
        super().__init__()
        self.cfg = cfg or ClassifierConfig()
        w = self.cfg.widths
        if len(w) != 4:
            raise ValueError("classifier uses exactly four convolution blocks")
        blocks = []
        c_in = 1
        for c_out in w:
            blocks += [
                nn.Conv2d(c_in, c_out, kernel_size=3, padding=1),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(2),
            ]
            c_in = c_out
        self.conv = nn.Sequential(*blocks)
        flat = w[-1] * (256 // 16) ** 2
        self.fc1 = nn.Linear(flat, self.cfg.hidden)
        self.fc2 = nn.Linear(self.cfg.hidden, self.cfg.n_classes)
        # zero-init the label layer: label order then cannot leak into the
        # init, keeping permuted-label runs exactly equivariant
        nn.init.zeros_(self.fc2.weight)
        nn.init.zeros_(self.fc2.bias)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """(B, 1, 256, 256) image -> (B, n_classes) log-probabilities."""
        if image.dim() != 4 or tuple(image.shape[1:]) != (1, 256, 256):
            raise ValueError(f"expected (B, 1, 256, 256), got {tuple(image.shape)}")
        x = self.conv(image).flatten(1)
        x = F.relu(self.fc1(x))
        return F.log_softmax(self.fc2(x), dim=1)


def classify(model: IdentityClassifier, image) -> np.ndarray:
    """Log-probability vector for one 256x256 image."""
    arr = torch.as_tensor(np.asarray(image, dtype=np.float32))
    if arr.shape != (256, 256):
        raise ValueError(f"expected a 256x256 image, got {tuple(arr.shape)}")
    model.eval()
    with torch.no_grad():
        out = model(arr[None, None])
    return out[0].numpy()


def confusion_matrix(model, images, labels, n_classes: int) -> np.ndarray:
    model.eval()
    matrix = np.zeros((n_classes, n_classes), dtype=int)
    with torch.no_grad():
        pred = model(images).argmax(dim=1)
    for t, p in zip(labels.tolist(), pred.tolist()):
        matrix[t, p] += 1
    return matrix


def train_classifier(
    images: torch.Tensor,
    labels: torch.Tensor,
    cfg: ClassifierConfig,
    out_dir,
    eval_images: torch.Tensor | None = None,
    eval_labels: torch.Tensor | None = None,
    stop_at_accuracy: float | None = None,
):
    """SGD training with the stepped decay schedule.

    Emits history.csv, confusion.txt (plain-text grid plus per-class
    accuracy) and confusion.png into ``out_dir``; the confusion matrix is
    computed on the eval split when one is given, else on the training
    data. Returns (model, confusion, history).
    """
    if torch.unique(labels).numel() < 2:
        raise ValueError("training needs at least two classes")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)

    model = IdentityClassifier(cfg)
    opt = torch.optim.SGD(model.parameters(), lr=cfg.lr, momentum=cfg.momentum)
    history = []
    n = images.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        lr = classifier_lr(epoch, cfg.lr, cfg.decay_every, cfg.decay_factor)
        for group in opt.param_groups:
            group["lr"] = lr
        model.train()
        perm = torch.randperm(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            opt.zero_grad()
            out = model(images[idx])
            loss = F.nll_loss(out, labels[idx])
            loss.backward()
            opt.step()
            total += loss.item() * idx.numel()
        row = {"epoch": epoch, "lr": lr, "train_loss": total / n}
        if eval_images is not None:
            cm = confusion_matrix(model, eval_images, eval_labels, cfg.n_classes)
            row["eval_accuracy"] = float(np.trace(cm)) / cm.sum()
        history.append(row)
        if (
            stop_at_accuracy is not None
            and "eval_accuracy" in row
            and row["eval_accuracy"] >= stop_at_accuracy
        ):
            break

    with open(out_dir / "history.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(history[-1].keys()))
        writer.writeheader()
        writer.writerows(history)

    if eval_images is not None:
        cm = confusion_matrix(model, eval_images, eval_labels, cfg.n_classes)
    else:
        cm = confusion_matrix(model, images, labels, cfg.n_classes)
    _emit_confusion(cm, out_dir)
    return model, cm, history


def _emit_confusion(cm: np.ndarray, out_dir: Path) -> None:
    lines = ["confusion matrix (rows = true, cols = predicted)"]
    for i, row in enumerate(cm):
        lines.append(" ".join(f"{v:5d}" for v in row))
    per_class = [
        f"class {i}: {row[i] / row.sum():.3f}" if row.sum() else f"class {i}: n/a"
        for i, row in enumerate(cm)
    ]
    lines.append("per-class accuracy: " + ", ".join(per_class))
    (out_dir / "confusion.txt").write_text("\n".join(lines) + "\n")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(cm, cmap="Blues")
    for (i, j), v in np.ndenumerate(cm):
        ax.text(j, i, str(v), ha="center", va="center")
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title("confusion matrix")
    fig.tight_layout()
    fig.savefig(out_dir / "confusion.png", dpi=110)
    plt.close(fig)
