"""Static background and internal-leakage removal.

A short empty-room recording provides a reference CIR; each live frame
subtracts a complex-scaled copy of the reference average, with the scale
chosen in closed form to minimize the energy of the first ``k0`` taps
(the taps a person cannot reach, only internal leakage can).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import CirFrame


class BackgroundError(ValueError):
    """Invalid background-removal input."""


@dataclass
class BackgroundConfig:
    """k0: leakage window length in taps; per_pair_alpha: scale each
    Tx/Rx pair independently instead of one global scale."""

    k0: int = 4
    per_pair_alpha: bool = True

    def __post_init__(self):
        if self.k0 < 1:
            raise BackgroundError("k0 must be at least 1")


class EmptyCirSet:
    """Empty-room frames plus their cached average cube."""

    def __init__(self, frames):
        frames = list(frames)
        if not frames:
            raise BackgroundError("empty reference needs at least one frame")
        shape = frames[0].data.shape
        for f in frames[1:]:
            if f.data.shape != shape:
                raise BackgroundError("empty frames have mismatched dimensions")
        self.frames = frames
        self.mean_cube = np.mean([f.data for f in frames], axis=0)

    @property
    def n_samples(self) -> int:
        return len(self.frames)


def estimate_alpha(h: np.ndarray, h_mean: np.ndarray, k0: int) -> complex:
    """Least-squares scale minimizing sum_{k<k0} |h[k] - alpha h_mean[k]|^2.

    Closed form: alpha = <h_mean_w, h_w> / <h_mean_w, h_mean_w> over the
    first k0 taps.
    """
    h = np.asarray(h)
    h_mean = np.asarray(h_mean)
    if k0 < 1 or h.shape[-1] < k0 or h_mean.shape[-1] < k0:
        raise BackgroundError("tap vectors shorter than the k0 window")
    ref = h_mean[..., :k0]
    denom = np.vdot(ref, ref).real
    if denom <= 0.0:
        raise BackgroundError("degenerate empty reference")
    return complex(np.vdot(ref, h[..., :k0]) / denom)


def remove_background(frame: CirFrame, empty: EmptyCirSet, cfg: BackgroundConfig) -> CirFrame:
    """Subtract the scaled empty-room average from one frame.

    With ``per_pair_alpha`` each (tx, rx) tap vector gets its own complex
    scale; otherwise a single scale is fit over every pair's leakage
    window at once. Output dimensions match the input.
    """
    data = frame.data
    mean = empty.mean_cube
    if data.shape != mean.shape:
        raise BackgroundError("dimension mismatch between frame and empty reference")
    k0 = cfg.k0
    if k0 > data.shape[2]:
        raise BackgroundError("k0 exceeds the tap window")

    ref = mean[:, :, :k0]
    win = data[:, :, :k0]
    if cfg.per_pair_alpha:
        denom = (ref.conj() * ref).real.sum(axis=2)
        if np.any(denom <= 0.0):
            raise BackgroundError("degenerate empty reference")
        alpha = (ref.conj() * win).sum(axis=2) / denom
        cleaned = data - alpha[:, :, None] * mean
    else:
        denom = (ref.conj() * ref).real.sum()
        if denom <= 0.0:
            raise BackgroundError("degenerate empty reference")
        alpha = (ref.conj() * win).sum() / denom
        cleaned = data - alpha * mean
    return CirFrame(cleaned, tap_spacing=frame.tap_spacing, timestamp=frame.timestamp)
