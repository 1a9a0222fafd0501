"""Conditional-GAN training: alternating generator/discriminator updates,
the four-term generator objective, exponential late decay, atomic
checkpoints, per-epoch loss curves and the loss-ablation harness."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .data import PairedSamples
from .discriminator import TwoStreamDiscriminator
from .generator import SpectrumGenerator
from .losses import (
    LossWeights,
    PerceptualLoss,
    TrainingDivergence,
    discriminator_gan_loss,
    final_loss,
    generator_gan_loss,
    ssim_loss,
    weighted_l1,
)


@dataclass
class TrainConfig:
    epochs: int = 200
    lr_generator: float = 1e-3
    lr_discriminator: float = 1e-5
    decay_start: int = 100  # constant before, exponential after
    decay_gamma: float = 0.97
    batch_size: int = 8
    gan_mode: str = "vanilla"  # or "lsgan"
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    checkpoint_every: int = 50

    def __post_init__(self):
        if self.lr_generator <= 0 or self.lr_discriminator <= 0:
            raise ValueError("learning rates must be positive")
        if not (0.0 < self.decay_gamma < 1.0):
            raise ValueError("decay gamma must lie in (0, 1)")


def lr_factor(epoch: int, decay_start: int = 100, gamma: float = 0.97) -> float:
    """Schedule multiplier for 1-based epochs: 1 through ``decay_start``,
    then gamma^(epoch - decay_start)."""
    if epoch < 1:
        raise ValueError("epochs are 1-based")
    if epoch <= decay_start:
        return 1.0
    return gamma ** (epoch - decay_start)


def _atomic_save(obj, path: Path) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(obj, tmp)
    os.replace(tmp, path)


def train_cgan(
    samples: PairedSamples,
    cfg: TrainConfig,
    out_dir,
    generator: SpectrumGenerator | None = None,
    discriminator: TwoStreamDiscriminator | None = None,
    perceptual: PerceptualLoss | None = None,
):
    """Train the reconstructor on paired (spectrum, depth) samples.

    Returns (generator, discriminator, curves); curves is a list of
    per-epoch dicts also persisted to ``out_dir/curves.csv``. Checkpoints
    land in ``out_dir`` (write-then-rename); a non-finite loss aborts with
    ``TrainingDivergence`` after saving the last good state. Deterministic
    under a fixed seed up to backend nondeterminism.
    """
    if len(samples) == 0:
        raise ValueError("training needs at least one pair")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)

    gen = generator or SpectrumGenerator()
    disc = discriminator or TwoStreamDiscriminator()
    perc = perceptual or PerceptualLoss()

    opt_g = torch.optim.Adam(gen.parameters(), lr=cfg.lr_generator)
    opt_d = torch.optim.Adam(disc.parameters(), lr=cfg.lr_discriminator)
    sched = lambda e: lr_factor(e, cfg.decay_start, cfg.decay_gamma)  # noqa: E731

    (out_dir / "run.json").write_text(
        json.dumps(
            {
                "epochs": cfg.epochs,
                "lr_generator": cfg.lr_generator,
                "lr_discriminator": cfg.lr_discriminator,
                "decay_start": cfg.decay_start,
                "decay_gamma": cfg.decay_gamma,
                "gan_mode": cfg.gan_mode,
                "lambda_1": cfg.weights.lambda_1,
                "lambda_p": cfg.weights.lambda_p,
                "lambda_s": cfg.weights.lambda_s,
                "perceptual_backend": perc.backend,
                "seed": cfg.seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )

    curves = []
    n = len(samples)
    try:
        for epoch in range(1, cfg.epochs + 1):
            factor = sched(epoch)
            for group in opt_g.param_groups:
                group["lr"] = cfg.lr_generator * factor
            for group in opt_d.param_groups:
                group["lr"] = cfg.lr_discriminator * factor

            perm = torch.randperm(n)
            sums = {"d": 0.0, "gan": 0.0, "l1w": 0.0, "lp": 0.0, "lssim": 0.0, "final": 0.0}
            batches = 0
            for start in range(0, n, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                x = samples.spectra[idx]
                y = samples.images[idx]

                gen.train()
                disc.train()
                fake = gen(x)

                d_real, _, _ = disc(x, y)
                d_fake, _, _ = disc(x, fake.detach())
                d_loss = discriminator_gan_loss(d_real, d_fake, cfg.gan_mode)
                if not torch.isfinite(d_loss):
                    raise TrainingDivergence("discriminator")
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()

                d_fake2, _, _ = disc(x, fake)
                l_gan = generator_gan_loss(d_fake2, cfg.gan_mode)
                w = cfg.weights.pixel_weights(y)
                l1w = weighted_l1(y, fake, w)
                lp = perc(y, fake)
                lssim = ssim_loss(y, fake)
                total = final_loss(l_gan, l1w, lp, lssim, cfg.weights)
                opt_g.zero_grad()
                total.backward()
                opt_g.step()

                sums["d"] += d_loss.item()
                sums["gan"] += l_gan.item()
                sums["l1w"] += l1w.item()
                sums["lp"] += lp.item()
                sums["lssim"] += lssim.item()
                sums["final"] += total.item()
                batches += 1

            row = {
                "epoch": epoch,
                "d_loss": sums["d"] / batches,
                "gan": sums["gan"] / batches,
                "l1_weighted": sums["l1w"] / batches,
                "perceptual": sums["lp"] / batches,
                "ssim": sums["lssim"] / batches,
                "final": sums["final"] / batches,
                "lr_generator": cfg.lr_generator * factor,
                "lr_discriminator": cfg.lr_discriminator * factor,
            }
            curves.append(row)
            if epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs:
                _atomic_save(
                    {"generator": gen.state_dict(), "discriminator": disc.state_dict(),
                     "epoch": epoch},
                    out_dir / "checkpoint_last.pt",
                )
    except TrainingDivergence:
        _atomic_save(
            {"generator": gen.state_dict(), "discriminator": disc.state_dict(),
             "epoch": len(curves)},
            out_dir / "checkpoint_last.pt",
        )
        _write_curves(out_dir / "curves.csv", curves)
        raise

    _write_curves(out_dir / "curves.csv", curves)
    return gen, disc, curves


def _write_curves(path: Path, curves) -> None:
    if not curves:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(curves[0].keys()))
        writer.writeheader()
        writer.writerows(curves)


#: Loss combinations of the ablation study, in cumulative order.
ABLATION_COMBOS = (
    ("gan",),
    ("gan", "l1"),
    ("gan", "l1", "perceptual"),
    ("gan", "l1", "perceptual", "ssim"),
)


def run_ablation(
    samples: PairedSamples,
    out_dir,
    epochs: int = 40,
    base: TrainConfig | None = None,
    combos=ABLATION_COMBOS,
):
    """Train one run per loss combination; emit curves and sample images.

    Each combination directory gets curves.csv, run.json, the final
    checkpoint, a generated.mmt depth image (container format, so the
    imaging CLI can score it) and generated.png for eyeballing.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .container import write_tensor

    out_dir = Path(out_dir)
    results = {}
    base = base or TrainConfig()
    for combo in combos:
        cfg = TrainConfig(
            epochs=epochs,
            lr_generator=base.lr_generator,
            lr_discriminator=base.lr_discriminator,
            decay_start=base.decay_start,
            decay_gamma=base.decay_gamma,
            batch_size=base.batch_size,
            gan_mode=base.gan_mode,
            weights=LossWeights(
                lambda_1=base.weights.lambda_1 if "l1" in combo else 0.0,
                lambda_p=base.weights.lambda_p if "perceptual" in combo else 0.0,
                lambda_s=base.weights.lambda_s if "ssim" in combo else 0.0,
                foreground_weight=base.weights.foreground_weight,
            ),
            seed=base.seed,
            checkpoint_every=epochs,
        )
        name = "+".join(combo)
        combo_dir = out_dir / name.replace("+", "_")
        gen, _, curves = train_cgan(samples, cfg, combo_dir)

        gen.eval()
        with torch.no_grad():
            img = gen(samples.spectra[:1])[0, 0].numpy()
        write_tensor(
            combo_dir / "generated.mmt",
            img * samples.scale,
            dtype="f32",
            axis_names=["theta", "phi"],
            meta={"losses": list(combo)},
        )
        plt.imsave(combo_dir / "generated.png", img, cmap="gray")

        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot([row["final"] for row in curves], label="generator total")
        ax.plot([row["d_loss"] for row in curves], label="discriminator")
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.set_title(name)
        ax.legend()
        fig.tight_layout()
        fig.savefig(combo_dir / "curves.png", dpi=110)
        plt.close(fig)

        results[name] = curves
    return results
