"""Offline rendering of a camera trajectory to numbered PNG frames."""

from __future__ import annotations

import os

from .dataset import load_trajectory, save_image
from .raster.forward import render_forward
from .scene import Scene, load_ply


def render_trajectory(scene, trajectory, out_dir) -> list[str]:
    """Render one PNG per trajectory entry into out_dir.

    `scene` is a Scene or a PLY path; `trajectory` is a view list or a
    trajectory JSON path.  Filenames are zero-padded entry indices; the
    returned list holds them in order.
    """
    if not isinstance(scene, Scene):
        scene = load_ply(scene)
    if not isinstance(trajectory, list):
        trajectory = load_trajectory(trajectory)
    os.makedirs(out_dir, exist_ok=True)
    width = max(4, len(str(max(len(trajectory) - 1, 0))))
    paths = []
    for i, view in enumerate(trajectory):
        img = render_forward(scene, view).color
        path = os.path.join(out_dir, f"{i:0{width}d}.png")
        save_image(path, img)
        paths.append(path)
    return paths
