"""Two-stream conditional discriminator.

A 3D encoder digests the spectrum volume and a 2D encoder digests the
(real or generated) depth image; each emits a 256-vector, and the
concatenated 512-vector feeds a fully connected head that votes
real-vs-generated.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class DiscriminatorSpec:
    base_width: int = 8
    embedding_dim: int = 256


class TwoStreamDiscriminator(nn.Module):
    def __init__(self, spec: DiscriminatorSpec | None = None):
        super().__init__()
        self.spec = spec or DiscriminatorSpec()
        w = self.spec.base_width
        emb = self.spec.embedding_dim

        def c3(c_in, c_out, stride=(2, 2, 2)):
            return nn.Sequential(
                nn.Conv3d(c_in, c_out, 3, stride=stride, padding=1),
                nn.BatchNorm3d(c_out),
                nn.LeakyReLU(0.2, inplace=True),
            )

        def c2(c_in, c_out):
            return nn.Sequential(
                nn.Conv2d(c_in, c_out, 4, stride=2, padding=1),
                nn.BatchNorm2d(c_out),
                nn.LeakyReLU(0.2, inplace=True),
            )

        self.stream_3d = nn.Sequential(
            c3(1, w), c3(w, 2 * w), c3(2 * w, 4 * w), c3(4 * w, 8 * w),
            c3(8 * w, 16 * w, stride=(2, 1, 1)),
        )
        self.embed_3d = nn.Linear(16 * w * 8 * 8, emb)
        self.stream_2d = nn.Sequential(
            c2(1, w), c2(w, 2 * w), c2(2 * w, 4 * w),
            c2(4 * w, 4 * w), c2(4 * w, 8 * w), c2(8 * w, 8 * w),
        )
        self.embed_2d = nn.Linear(8 * w * 4 * 4, emb)
        self.head = nn.Sequential(
            nn.Linear(2 * emb, 128),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(128, 1),
        )

    def forward(self, volume: torch.Tensor, image: torch.Tensor):
        """Returns (score logits (B, 1), spectrum embedding, image embedding)."""
        if volume.dim() != 5 or tuple(volume.shape[1:]) != (1, 32, 128, 128):
            raise ValueError(f"bad spectrum volume shape {tuple(volume.shape)}")
        if image.dim() != 4 or tuple(image.shape[1:]) != (1, 256, 256):
            raise ValueError(f"bad image shape {tuple(image.shape)}")
        emb3 = self.embed_3d(self.stream_3d(volume).flatten(1))
        emb2 = self.embed_2d(self.stream_2d(image).flatten(1))
        score = self.head(torch.cat([emb3, emb2], dim=1))
        return score, emb3, emb2
