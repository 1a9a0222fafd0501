"""Reconstruction losses: GAN, weighted L1, perceptual, SSIM and their
weighted combination."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

import torch
import torch.nn.functional as F

from .ssim import ssim

log = logging.getLogger(__name__)


class TrainingDivergence(RuntimeError):
    """A loss term went non-finite during training."""

    def __init__(self, term: str):
        super().__init__(f"non-finite loss term: {term}")
        self.term = term


@dataclass
class LossWeights:
    """Weights of the final loss combination.

    ``pixel_weights`` re-weights the L1 image term; foreground (the
    ground-truth silhouette) counts ``foreground_weight`` times more than
    background so the small target region is not drowned out.
    """

    lambda_1: float = 1.0
    lambda_p: float = 1.0
    lambda_s: float = 1.0
    foreground_weight: float = 10.0

    def __post_init__(self):
        for name in ("lambda_1", "lambda_p", "lambda_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.foreground_weight <= 1.0:
            raise ValueError("foreground weight must exceed the background weight (1)")

    def pixel_weights(self, target: torch.Tensor, threshold: float = 0.0) -> torch.Tensor:
        mask = (target > threshold).to(target.dtype)
        return 1.0 + (self.foreground_weight - 1.0) * mask


def weighted_l1(y: torch.Tensor, y_hat: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Exact weighted sum sum_i w_i |y_i - y_hat_i| (plain L1 when w = 1)."""
    if y.shape != y_hat.shape:
        raise ValueError("image shapes differ")
    if torch.any(weights < 0):
        raise ValueError("pixel weights must be non-negative")
    return (weights * (y - y_hat).abs()).sum()


def ssim_loss(y: torch.Tensor, y_hat: torch.Tensor, window: int = 11,
              data_range: float = 1.0) -> torch.Tensor:
    """Negative SSIM; -1 at a perfect match."""
    return -ssim(y, y_hat, window=window, data_range=data_range)


class PerceptualLoss(torch.nn.Module):
    """Mean L1 distance in a frozen feature space.

    Prefers pretrained VGG16 activations (through relu3_3); when the
    weights cannot be loaded (offline environments) it falls back to
    identity features — plain pixel L1 — with a logged warning. The
    operative backend is exposed as ``backend`` and should be recorded in
    run manifests.
    """

    def __init__(self):
        super().__init__()
        self.backend = "identity"
        self.features = None
        try:
            from torchvision.models import VGG16_Weights, vgg16

            net = vgg16(weights=VGG16_Weights.IMAGENET1K_V1).features[:16]
            net.eval()
            for p in net.parameters():
                p.requires_grad_(False)
            self.features = net
            self.backend = "vgg16-relu3_3"
        except Exception as exc:  # weights unavailable, stay usable
            log.warning("perceptual extractor unavailable (%s); "
                        "falling back to identity features", exc)

    def forward(self, y: torch.Tensor, y_hat: torch.Tensor) -> torch.Tensor:
        if y.shape != y_hat.shape:
            raise ValueError("image shapes differ")
        if self.features is None:
            return (y - y_hat).abs().mean()
        return (self._activations(y) - self._activations(y_hat)).abs().mean()

    def _activations(self, img: torch.Tensor) -> torch.Tensor:
        mean = torch.tensor([0.485, 0.456, 0.406], device=img.device)[:, None, None]
        std = torch.tensor([0.229, 0.224, 0.225], device=img.device)[:, None, None]
        x = (img.repeat(1, 3, 1, 1) - mean) / std
        return self.features(x)


def generator_gan_loss(d_fake_logits: torch.Tensor, mode: str = "vanilla") -> torch.Tensor:
    """Non-saturating generator objective (or least-squares with mode="lsgan")."""
    if mode == "vanilla":
        return F.binary_cross_entropy_with_logits(
            d_fake_logits, torch.ones_like(d_fake_logits)
        )
    if mode == "lsgan":
        return ((d_fake_logits - 1.0) ** 2).mean()
    raise ValueError(f"unknown GAN mode {mode!r}")


def discriminator_gan_loss(
    d_real_logits: torch.Tensor, d_fake_logits: torch.Tensor, mode: str = "vanilla"
) -> torch.Tensor:
    if mode == "vanilla":
        real = F.binary_cross_entropy_with_logits(
            d_real_logits, torch.ones_like(d_real_logits)
        )
        fake = F.binary_cross_entropy_with_logits(
            d_fake_logits, torch.zeros_like(d_fake_logits)
        )
        return real + fake
    if mode == "lsgan":
        return ((d_real_logits - 1.0) ** 2).mean() + (d_fake_logits**2).mean()
    raise ValueError(f"unknown GAN mode {mode!r}")


def final_loss(
    l_gan: torch.Tensor,
    l1_weighted: torch.Tensor,
    l_perceptual: torch.Tensor,
    l_ssim: torch.Tensor,
    weights: LossWeights,
) -> torch.Tensor:
    """L_G + lambda_1 L1w + lambda_p Lp + lambda_s L_SSIM, with each term
    checked finite (a NaN aborts the step naming the offender)."""
    for name, term in [
        ("gan", l_gan),
        ("l1_weighted", l1_weighted),
        ("perceptual", l_perceptual),
        ("ssim", l_ssim),
    ]:
        if not torch.isfinite(term).all():
            raise TrainingDivergence(name)
    return (
        l_gan
        + weights.lambda_1 * l1_weighted
        + weights.lambda_p * l_perceptual
        + weights.lambda_s * l_ssim
    )


def grid_search(evaluate, grid=(0.1, 1.0, 10.0)):
    """Exhaustive search over lambda triples; returns (best_triple, best_score).

    ``evaluate(lambda_1, lambda_p, lambda_s)`` should return a validation
    score to minimize (typically silhouette difference).
    """
    best = None
    best_score = None
    for triple in product(grid, repeat=3):
        score = evaluate(*triple)
        if best_score is None or score < best_score:
            best, best_score = triple, score
    return best, best_score
