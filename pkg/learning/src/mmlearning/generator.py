"""Spectrum-to-depth generator.

Encoder: five 3D convolution blocks (stride-2, each followed by batch
normalization) squeeze the (32, 128, 128) spectrum volume to an 8x8
bottleneck. Decoder: six 2D blocks (five transposed convolutions plus the
output convolution) grow it to 256x256. Exactly two skip connections
bridge encoder and decoder at the two largest spatial resolutions that
have matching stages (64x64 and 32x32); the depth axis of each skip is
folded into channels before a 1x1 projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class GeneratorSpec:
    in_depth: int = 32
    in_size: int = 128
    out_size: int = 256
    base_width: int = 8

    def __post_init__(self):
        if self.in_size != 128 or self.in_depth != 32 or self.out_size != 256:
            raise ValueError("generator is sized for 128x128x32 -> 256x256")


def _enc3d(c_in, c_out, stride=(2, 2, 2)):
    return nn.Sequential(
        nn.Conv3d(c_in, c_out, kernel_size=3, stride=stride, padding=1),
        nn.BatchNorm3d(c_out),
        nn.LeakyReLU(0.2, inplace=True),
    )


def _dec2d(c_in, c_out):
    return nn.Sequential(
        nn.ConvTranspose2d(c_in, c_out, kernel_size=4, stride=2, padding=1),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class SpectrumGenerator(nn.Module):
    def __init__(self, spec: GeneratorSpec | None = None):
        super().__init__()
        self.spec = spec or GeneratorSpec()
        w = self.spec.base_width
        # encoder: (1, 32, 128, 128) -> (16w, 1, 8, 8)
        self.enc1 = _enc3d(1, w)            # (w, 16, 64, 64)
        self.enc2 = _enc3d(w, 2 * w)        # (2w, 8, 32, 32)
        self.enc3 = _enc3d(2 * w, 4 * w)    # (4w, 4, 16, 16)
        self.enc4 = _enc3d(4 * w, 8 * w)    # (8w, 2, 8, 8)
        self.enc5 = _enc3d(8 * w, 16 * w, stride=(2, 1, 1))  # (16w, 1, 8, 8)
        # decoder: (16w, 8, 8) -> (1, 256, 256)
        self.dec1 = _dec2d(16 * w, 8 * w)   # 16x16
        self.dec2 = _dec2d(8 * w, 4 * w)    # 32x32  + skip from enc2
        self.dec3 = _dec2d(4 * w, 2 * w)    # 64x64  + skip from enc1
        self.dec4 = _dec2d(2 * w, w)        # 128x128
        self.dec5 = _dec2d(w, w)            # 256x256
        self.dec6 = nn.Conv2d(w, 1, kernel_size=3, padding=1)
        # skip projections: fold depth into channels, then 1x1 to match
        self.skip2 = nn.Conv2d(2 * w * 8, 4 * w, kernel_size=1)
        self.skip1 = nn.Conv2d(w * 16, 2 * w, kernel_size=1)
        self.n_skips = 2

    def forward(self, volume: torch.Tensor) -> torch.Tensor:
        """(B, 1, 32, 128, 128) spectrum volume -> (B, 1, 256, 256) image."""
        expected = (1, self.spec.in_depth, self.spec.in_size, self.spec.in_size)
        if volume.dim() != 5 or tuple(volume.shape[1:]) != expected:
            raise ValueError(
                f"expected input (B, 1, {self.spec.in_depth}, {self.spec.in_size}, "
                f"{self.spec.in_size}), got {tuple(volume.shape)}"
            )
        e1 = self.enc1(volume)
        e2 = self.enc2(e1)
        e3 = self.enc3(e2)
        e4 = self.enc4(e3)
        e5 = self.enc5(e4).squeeze(2)

        x = self.dec1(e5)
        x = self.dec2(x) + self.skip2(e2.flatten(1, 2))
        x = self.dec3(x) + self.skip1(e1.flatten(1, 2))
        x = self.dec4(x)
        x = self.dec5(x)
        return torch.sigmoid(self.dec6(x))
