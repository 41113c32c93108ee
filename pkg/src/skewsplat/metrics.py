"""Image comparison metrics for training evaluation and the CLI.

Both metrics expect images in linear [0, 1] with matching shapes, either
(H, W) grayscale or (H, W, 3).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .optimize.losses import ssim

PSNR_CAP = 100.0


class ImageMetrics(NamedTuple):
    psnr: float
    ssim: float


def _checked(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim not in (2, 3):
        raise ValueError(f"expected (H, W) or (H, W, C) images, got {a.shape}")
    return a, b


def psnr(a, b) -> float:
    """10 * log10(1 / MSE), capped at PSNR_CAP for (near-)identical inputs."""
    a, b = _checked(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP))


def compare(a, b) -> ImageMetrics:
    """PSNR and SSIM between two images of identical shape."""
    a, b = _checked(a, b)
    return ImageMetrics(psnr=psnr(a, b), ssim=float(ssim(a, b)))
