"""Overfit a fixed-camera scene to a single target image.

The camera sits at the origin looking down +z and every primitive lives on
the plane one focal length out, so this exercises the full projection,
blending and gradient pipeline with the geometry held trivial.  Primitives
sample their initial color from the target under their own footprint; the
background is the target mean so the optimizer starts from a neutral canvas.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .camera import OPENCV, CameraView, intrinsics
from .initialize import initial_scene
from .metrics import psnr
from .optimize import Adam, TrainConfig, loss
from .raster.backward import render_backward
from .raster.forward import render_forward
from .scene import Scene

MIN_TARGET_DIM = 32


@dataclasses.dataclass
class Fit2DResult:
    scene: Scene
    view: CameraView
    psnr_curve: list[tuple[int, float]]
    final_psnr: float
    diverged_at: int | None
    n_skipped: int


def frontal_view(height: int, width: int, fov_x: float = math.pi / 2) -> CameraView:
    return CameraView(np.eye(4), OPENCV, width, height, fov_x)


def _plane_positions(rng, n, view, depth):
    # 0.95 keeps every mean strictly inside the frustum at z = depth
    half_x = math.tan(view.fov_x / 2.0) * depth * 0.95
    half_y = math.tan(view.fov_y / 2.0) * depth * 0.95
    x = rng.uniform(-half_x, half_x, n)
    y = rng.uniform(-half_y, half_y, n)
    return np.column_stack([x, y, np.full(n, depth)])


def _sampled_colors(target, positions, view):
    K = intrinsics(view)
    px = positions[:, 0] / positions[:, 2] * K[0, 0] + K[0, 2]
    py = positions[:, 1] / positions[:, 2] * K[1, 1] + K[1, 2]
    ix = np.clip(px.astype(np.int64), 0, view.width - 1)
    iy = np.clip(py.astype(np.int64), 0, view.height - 1)
    # away from the color floor so the SH gradient stays live either way
    return np.clip(target[iy, ix], 0.05, 0.95)


def training_step(scene, view, target, cfg, adam, iteration, stats=None):
    """One render/loss/backward/update cycle; returns (loss value, frame).

    When a densify statistics accumulator is passed its add() sees the raw
    gradient bundle before the regularizer terms are folded in.
    """
    frame = render_forward(scene, view)
    value, dpix, reg = loss(frame.color, target, cfg, scene)
    if not math.isfinite(value):
        return value, frame
    grads = render_backward(scene, view, frame, dpix)
    if stats is not None:
        stats.add(grads)
    grads.d_beta += reg[0]
    grads.d_opacity_logits += reg[1]
    adam.step(scene, grads, iteration)
    return value, frame


def fit2d(target: np.ndarray, n_primitives: int, cfg: TrainConfig | None = None,
          skew_enabled: bool = True, sh_degree: int = 0, depth: float = 1.0,
          fov_x: float = math.pi / 2, psnr_every: int = 100) -> Fit2DResult:
    """Fit n primitives to one image, reporting PSNR every psnr_every steps.

    With skew_enabled=False the skewness and boundary-direction learning
    rates are zeroed, freezing both at their zero initialization; everything
    else (seed, initialization, schedule) is identical, so paired runs
    isolate the effect of the asymmetric kernel.  A non-finite loss stops
    the run early and is reported through diverged_at.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 3 or target.shape[2] != 3:
        raise ValueError("target must be (H, W, 3)")
    if min(target.shape[0], target.shape[1]) < MIN_TARGET_DIM:
        raise ValueError(f"target must be at least {MIN_TARGET_DIM} pixels per side")
    if n_primitives < 1:
        raise ValueError("n_primitives must be >= 1")
    cfg = dataclasses.replace(cfg) if cfg is not None else TrainConfig()
    if not skew_enabled:
        cfg.lr_beta = 0.0
    cfg.validate()

    h, w = target.shape[:2]
    view = frontal_view(h, w, fov_x)
    rng = np.random.default_rng(cfg.seed)
    positions = _plane_positions(rng, n_primitives, view, depth)
    colors = _sampled_colors(target, positions, view)
    scene = initial_scene(positions, colors, background=target.mean(axis=(0, 1)),
                          sh_degree=sh_degree)
    adam = Adam(scene, cfg)

    curve: list[tuple[int, float]] = []
    diverged_at = None
    for it in range(cfg.iterations):
        value, frame = training_step(scene, view, target, cfg, adam, it)
        if it % psnr_every == 0:
            curve.append((it, psnr(frame.color, target)))
        if not math.isfinite(value):
            warnings.warn(f"loss went non-finite at iteration {it}; stopping "
                          "early", RuntimeWarning, stacklevel=2)
            diverged_at = it
            break

    final_psnr = psnr(render_forward(scene, view).color, target)
    curve.append((diverged_at if diverged_at is not None else cfg.iterations,
                  final_psnr))
    return Fit2DResult(scene=scene, view=view, psnr_curve=curve,
                       final_psnr=final_psnr, diverged_at=diverged_at,
                       n_skipped=adam.n_skipped)
