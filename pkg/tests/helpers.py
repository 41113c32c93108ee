"""Shared scene and camera fixtures for the test suite."""

from __future__ import annotations

import math

import numpy as np

from skewsplat.camera import CameraView, look_at
from skewsplat.scene import Scene, SkewGaussian


def random_scene(rng, n, sh_degree=2, skew_scale=0.6, spread=0.6,
                 equal_opacities=False, plain=False):
    """Scene of n primitives clustered near the origin.

    `plain` zeroes the skewness fields and ties the opacity pair together,
    the configuration in which the model must degenerate to a symmetric
    Gaussian mixture.
    """
    k = (sh_degree + 1) ** 2
    prims = []
    for _ in range(n):
        q = rng.normal(size=4)
        sh = np.zeros((k, 3))
        sh[0] = rng.uniform(0.5, 1.5, size=3)
        if k > 1:
            sh[1:] = rng.normal(size=(k - 1, 3)) * 0.03
        logits = rng.normal(size=2) * 0.8
        if equal_opacities or plain:
            logits[1] = logits[0]
        skew = np.zeros(3) if plain else rng.normal(size=3) * skew_scale
        direc = np.zeros(3) if plain else rng.normal(size=3) * skew_scale
        prims.append(SkewGaussian(
            mu=rng.normal(size=3) * spread,
            log_scale=rng.uniform(math.log(0.08), math.log(0.35), size=3),
            rot=q / np.linalg.norm(q),
            sh=sh,
            opacity_logits=logits,
            beta=skew,
            dir=direc,
        ))
    scene = Scene.from_primitives(prims, sh_degree=sh_degree)
    scene.background = rng.uniform(0.0, 1.0, size=3)
    return scene


def random_view(rng, width=64, height=64, dist=5.0, fov_x=0.9):
    theta = rng.uniform(0, 2 * math.pi)
    phi = rng.uniform(-0.7, 0.7)
    eye = dist * np.array([
        math.cos(phi) * math.cos(theta),
        math.sin(phi),
        math.cos(phi) * math.sin(theta),
    ])
    return CameraView(c2w=look_at(eye, np.zeros(3)), convention="opencv",
                      width=width, height=height, fov_x=fov_x)


def frontal_view(width=200, height=200, fov_x=math.pi / 2):
    """Identity-pose OpenCV camera: focal = width/2 at fov pi/2."""
    return CameraView(c2w=np.eye(4), convention="opencv", width=width,
                      height=height, fov_x=fov_x)


def mc_config(rng):
    A = rng.normal(size=(3, 3))
    Sigma = A @ A.T + 0.5 * np.eye(3)
    eta = rng.normal(size=3) * 1.5
    T = rng.normal(size=(2, 3))
    return Sigma, eta, T


def single_splat_scene(center_px, view, opacity, color, scale=0.1, depth=5.0,
                       beta=None, direc=None, logits_pair=None):
    """One primitive whose projected mean lands exactly on `center_px`.

    Assumes the frontal identity-pose view.  `opacity` is converted through
    the logit so that sigmoid(logits) equals it exactly.
    """
    from skewsplat.kernel_math import inverse_sigmoid
    from skewsplat.sh import SH_C0

    fx = view.width / (2.0 * math.tan(view.fov_x / 2.0))
    fy = view.height / (2.0 * math.tan(view.fov_y / 2.0))
    tx = (center_px[0] - view.width / 2.0) * depth / fx
    ty = (center_px[1] - view.height / 2.0) * depth / fy
    sh = np.zeros((1, 3))
    sh[0] = (np.asarray(color, dtype=np.float64) - 0.5) / SH_C0
    if logits_pair is None:
        logits_pair = np.full(2, inverse_sigmoid(opacity))
    g = SkewGaussian(
        mu=np.array([tx, ty, depth]),
        log_scale=np.full(3, math.log(scale)),
        rot=np.array([1.0, 0.0, 0.0, 0.0]),
        sh=sh,
        opacity_logits=np.asarray(logits_pair, dtype=np.float64),
        beta=np.zeros(3) if beta is None else np.asarray(beta, dtype=np.float64),
        dir=np.zeros(3) if direc is None else np.asarray(direc, dtype=np.float64),
    )
    return g
