"""Forward rendering: project, bin, and composite a scene into an image.

The returned bundle carries, besides the color image, the per-pixel final
transmittance and the index of the last blended instance; the backward pass
replays blending from that point without any cached per-pixel state.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..camera import CameraView, to_opencv
from ..projection import project_scene
from ..scene import Scene
from . import backend
from .tiles import bin_arrays

# the wire protocol carries image dims as 16-bit; enforce it everywhere
MAX_IMAGE_DIM = 65535


@dataclasses.dataclass
class FrameBundle:
    color: np.ndarray       # (H,W,3)
    final_T: np.ndarray     # (H,W)
    n_contrib: np.ndarray   # (H,W) int32
    last_idx: np.ndarray    # (H,W) int64, global sorted-instance index, -1 none
    width: int
    height: int
    n_primitives: int
    n_instances: int
    s: float                # screen dilation used; backward must match


def render_forward(scene: Scene, view: CameraView, s: float = 0.3,
                   backend_name: str | None = None) -> FrameBundle:
    view = to_opencv(view)
    if view.width > MAX_IMAGE_DIM or view.height > MAX_IMAGE_DIM:
        raise ValueError("image dimension overflow")

    proj = project_scene(scene, view, s)
    grid = bin_arrays(proj.mean2d, proj.radius, proj.depth, proj.valid,
                      view.width, view.height)
    kern = backend.kernels(backend_name)
    img, final_T, n_contrib, last_idx = kern.forward_tiles(
        proj.mean2d, proj.conic, proj.skew2d, proj.opacity_pair, proj.color,
        grid.inst_prim, grid.ranges, grid.tiles_x,
        view.width, view.height, scene.background)
    return FrameBundle(
        color=img, final_T=final_T, n_contrib=n_contrib, last_idx=last_idx,
        width=view.width, height=view.height, n_primitives=len(scene),
        n_instances=int(grid.inst_prim.shape[0]), s=s)
