"""Backward rendering: pixel-loss gradients to primitive-parameter gradients.

Projection and binning are deterministic, so the backward pass recomputes
them instead of carrying caches in the frame bundle, then replays blending
back to front from each pixel's last blended instance.  Per-instance slot
accumulation followed by an in-order reduction keeps the result bit-identical
under any parallel schedule over tiles.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..camera import CameraView, to_opencv
from ..projection import project_scene, projection_backward
from ..scene import Scene
from . import backend
from .forward import FrameBundle
from .tiles import bin_arrays


class FrameMismatchError(ValueError):
    """The frame bundle was not produced from this scene/view pair."""


@dataclasses.dataclass
class GradientBundle:
    d_mu: np.ndarray              # (N,3)
    d_log_scale: np.ndarray       # (N,3)
    d_rot: np.ndarray             # (N,4)
    d_sh: np.ndarray              # (N,K,3)
    d_opacity_logits: np.ndarray  # (N,2)
    d_beta: np.ndarray            # (N,3)
    d_dir: np.ndarray             # (N,3)
    g_uv: np.ndarray              # (N,) image-plane positional gradient norm
    g_z: np.ndarray               # (N,) |dL/d camera depth|
    n_skew_fallback: int


def _screen_gradients(scene, view, frame, dL_dpixels, backend_name=None):
    """Per-primitive gradients of the screen-splat quantities.

    Returns (proj, dict with d_mean2d, d_conic, d_skew2d, d_opair, d_color).
    Split out so tests can probe the raster stage without the projection
    chain on top.
    """
    proj = project_scene(scene, view, frame.s)
    grid = bin_arrays(proj.mean2d, proj.radius, proj.depth, proj.valid,
                      view.width, view.height)
    if grid.inst_prim.shape[0] != frame.n_instances:
        raise FrameMismatchError("instance count differs from the forward pass")

    kern = backend.kernels(backend_name)
    slots = kern.backward_tiles(
        proj.mean2d, proj.conic, proj.skew2d, proj.opacity_pair, proj.color,
        grid.inst_prim, grid.ranges, grid.tiles_x,
        view.width, view.height, scene.background,
        frame.final_T, frame.last_idx, dL_dpixels)

    n = len(scene)
    out = {
        "d_mean2d": np.zeros((n, 2)),
        "d_conic": np.zeros((n, 3)),
        "d_skew2d": np.zeros((n, 2)),
        "d_opair": np.zeros((n, 2)),
        "d_color": np.zeros((n, 3)),
    }
    cols = {"d_mean2d": (0, 2), "d_conic": (2, 5), "d_skew2d": (5, 7),
            "d_opair": (7, 9), "d_color": (9, 12)}
    for key, (lo, hi) in cols.items():
        np.add.at(out[key], grid.inst_prim, slots[:, lo:hi])
    return proj, out


def render_backward(scene: Scene, view: CameraView, frame: FrameBundle,
                    dL_dpixels: np.ndarray,
                    backend_name: str | None = None) -> GradientBundle:
    view = to_opencv(view)
    if (view.width, view.height) != (frame.width, frame.height):
        raise FrameMismatchError("view dimensions differ from the frame bundle")
    if len(scene) != frame.n_primitives:
        raise FrameMismatchError("primitive count differs from the frame bundle")
    dL = np.ascontiguousarray(dL_dpixels, dtype=np.float64)
    if dL.shape != (frame.height, frame.width, 3):
        raise FrameMismatchError(
            f"dL_dpixels must be ({frame.height}, {frame.width}, 3)")

    proj, screen = _screen_gradients(scene, view, frame, dL, backend_name)
    grads = projection_backward(
        proj, scene, view, screen["d_mean2d"], screen["d_conic"],
        screen["d_skew2d"], screen["d_opair"], screen["d_color"])
    return GradientBundle(
        d_mu=grads["d_mu"], d_log_scale=grads["d_log_scale"],
        d_rot=grads["d_rot"], d_sh=grads["d_sh"],
        d_opacity_logits=grads["d_opacity_logits"], d_beta=grads["d_beta"],
        d_dir=grads["d_dir"], g_uv=grads["g_uv"], g_z=grads["g_z"],
        n_skew_fallback=proj.n_skew_fallback)
