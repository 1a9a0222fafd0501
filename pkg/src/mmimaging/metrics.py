"""Silhouette-difference and SSIM image metrics.

Silhouette difference (SD) is the XOR rate between two binary masks,
reported as a percentage of all pixels. SSIM follows the standard
Gaussian-windowed luminance/contrast/structure form; local values are
averaged over the window-valid interior only, so results match the
common reference implementations bit-for-bit on the interior.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d


class MetricError(ValueError):
    """Invalid metric input."""


def validate_depth_image(img: np.ndarray, size: int = 256) -> np.ndarray:
    """Check the depth-image contract: exact shape, finite, non-negative."""
    img = np.asarray(img, dtype=float)
    if img.shape != (size, size):
        raise MetricError(f"depth image must be {size}x{size}, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise MetricError("depth image must be finite")
    if img.min() < 0:
        raise MetricError("depth image must be non-negative")
    return img


def to_mask(img: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Binarize an image: True where value > threshold."""
    if threshold < 0:
        raise MetricError("threshold must be non-negative")
    return np.asarray(img) > threshold


def silhouette_difference(a: np.ndarray, b: np.ndarray) -> float:
    """Percentage of pixels where the two masks disagree (XOR rate)."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise MetricError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return 100.0 * np.count_nonzero(a ^ b) / a.size


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    radius = (window - 1) // 2
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = correlate1d(img, kernel, axis=0, mode="reflect")
    return correlate1d(out, kernel, axis=1, mode="reflect")


def ssim(
    x: np.ndarray,
    y: np.ndarray,
    window: int = 11,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float | None = None,
    sigma: float = 1.5,
) -> float:
    """Mean structural similarity between two equal-shape images.

    Args:
        x, y: 2-D arrays of the same shape, at least ``window`` on a side.
        window: odd Gaussian window size (11 taps for sigma 1.5).
        k1, k2: stabilizing constants of the standard definition.
        data_range: dynamic range L; defaults to the joint value spread of
            the two inputs. Must be positive.
        sigma: Gaussian window standard deviation.

    Returns:
        Value in [-1, 1]; 1 means identical images. Symmetric in x and y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise MetricError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.ndim != 2 or min(x.shape) < window:
        raise MetricError("images must be 2-D and at least the window size")
    if window % 2 != 1 or window < 3:
        raise MetricError("window must be odd and >= 3")
    if data_range is None:
        lo = min(x.min(), y.min())
        hi = max(x.max(), y.max())
        data_range = hi - lo
    if data_range <= 0:
        raise MetricError("data range must be positive")

    kernel = _gaussian_kernel(window, sigma)
    ux = _windowed_mean(x, kernel)
    uy = _windowed_mean(y, kernel)
    uxx = _windowed_mean(x * x, kernel)
    uyy = _windowed_mean(y * y, kernel)
    uxy = _windowed_mean(x * y, kernel)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    s = ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / (
        (ux * ux + uy * uy + c1) * (vx + vy + c2)
    )
    pad = (window - 1) // 2
    return float(s[pad:-pad, pad:-pad].mean())
