"""Differentiable SSIM (Gaussian-windowed, standard constants).

Local statistics come from a valid-region Gaussian convolution, so the
value matches filter-then-crop reference implementations; the mean over
windows is differentiable with respect to both inputs.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def gaussian_kernel(window: int, sigma: float, dtype, device) -> torch.Tensor:
    radius = (window - 1) // 2
    x = torch.arange(-radius, radius + 1, dtype=dtype, device=device)
    k = torch.exp(-0.5 * (x / sigma) ** 2)
    k = k / k.sum()
    return (k[:, None] * k[None, :])[None, None]


def _blur(img: torch.Tensor, kernel_1d: torch.Tensor) -> torch.Tensor:
    # separable valid-region Gaussian: two 1-D passes
    out = F.conv2d(img, kernel_1d[None, None, :, None])
    return F.conv2d(out, kernel_1d[None, None, None, :])


def ssim(
    x: torch.Tensor,
    y: torch.Tensor,
    window: int = 11,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float = 1.0,
    sigma: float = 1.5,
) -> torch.Tensor:
    """Mean SSIM of two (B, 1, H, W) or (H, W) image batches."""
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {tuple(x.shape)} vs {tuple(y.shape)}")
    if data_range <= 0:
        raise ValueError("data range must be positive")
    squeeze = x.dim() == 2
    if squeeze:
        x = x[None, None]
        y = y[None, None]
    if min(x.shape[-2:]) < window:
        raise ValueError("images smaller than the window")

    radius = (window - 1) // 2
    k1d = torch.arange(-radius, radius + 1, dtype=x.dtype, device=x.device)
    k1d = torch.exp(-0.5 * (k1d / sigma) ** 2)
    k1d = k1d / k1d.sum()
    mu_x = _blur(x, k1d)
    mu_y = _blur(y, k1d)
    xx = _blur(x * x, k1d) - mu_x * mu_x
    yy = _blur(y * y, k1d) - mu_y * mu_y
    xy = _blur(x * y, k1d) - mu_x * mu_y

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    s = ((2 * mu_x * mu_y + c1) * (2 * xy + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    )
    return s.mean()
