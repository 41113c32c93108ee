"""Synthetic blob scene and orbit cameras for self-recovery experiments.

The scene is three well-separated colored blobs near the origin rendered by
the package's own forward pass, so a fit against the generated images has an
exactly representable optimum.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .camera import OPENCV, CameraView, look_at
from .dataset import CAMERAS_FILENAME, Dataset, save_cameras, save_image
from .raster.forward import render_forward
from .scene import Scene, SkewGaussian
from .sh import SH_C0

BLOB_BACKGROUND = (0.05, 0.05, 0.08)


def _blob(position, color, scale, opacity=0.92):
    logit = math.log(opacity / (1.0 - opacity))
    sh = np.zeros((1, 3))
    sh[0] = (np.asarray(color, dtype=np.float64) - 0.5) / SH_C0
    return SkewGaussian(
        mu=np.asarray(position, dtype=np.float64),
        log_scale=np.log(np.asarray(scale, dtype=np.float64)),
        rot=np.array([1.0, 0.0, 0.0, 0.0]),
        sh=sh,
        opacity_logits=np.array([logit, logit]),
        beta=np.zeros(3),
        dir=np.zeros(3),
    )


def blob_scene() -> Scene:
    """Three colored blobs: red, green, blue, slightly anisotropic."""
    prims = [
        _blob((-0.7, 0.0, 0.2), (0.85, 0.15, 0.10), (0.42, 0.30, 0.34)),
        _blob((0.6, 0.35, -0.1), (0.12, 0.75, 0.20), (0.30, 0.44, 0.30)),
        _blob((0.1, -0.5, -0.3), (0.15, 0.25, 0.88), (0.36, 0.30, 0.42)),
    ]
    return Scene.from_primitives(prims, background=BLOB_BACKGROUND, sh_degree=0)


def orbit_views(n: int, radius: float = 4.0, elevation: float = 1.2,
                width: int = 64, height: int = 64,
                fov_x: float = 0.9) -> list[CameraView]:
    """n cameras on a circle at the given height, all looking at the origin."""
    views = []
    for k in range(n):
        a = 2.0 * math.pi * k / n
        eye = (radius * math.cos(a), elevation, radius * math.sin(a))
        c2w = look_at(eye, (0.0, 0.0, 0.0), convention=OPENCV)
        views.append(CameraView(c2w, OPENCV, width, height, fov_x))
    return views


def generate_blob_dataset(root, n_views: int = 8, width: int = 64,
                          height: int = 64) -> Dataset:
    """Render the blob scene from an orbit and write a dataset under root."""
    scene = blob_scene()
    views = orbit_views(n_views, width=width, height=height)
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    files = []
    images = []
    for i, view in enumerate(views):
        img = render_forward(scene, view).color
        file = os.path.join("images", f"{i:04d}.png")
        save_image(os.path.join(root, file), img)
        files.append(file)
        images.append((img, view))
    save_cameras(os.path.join(root, CAMERAS_FILENAME), views, files)
    return Dataset(images)
