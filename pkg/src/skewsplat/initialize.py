"""Shared scene initialization for the fitting entry points.

Positions come from the caller (frustum plane for single-view fits, unit box
for multi-view); scales are isotropic from nearest-neighbor distances, base
opacities start at 0.1 on both sides of the boundary, and skewness starts at
zero so the symmetric kernel is the optimization origin.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .scene import Scene
from .sh import SH_C0

INIT_OPACITY = 0.1


def nn_log_scales(mu: np.ndarray, fallback: float = 0.1) -> np.ndarray:
    """Isotropic log scales set to each point's nearest-neighbor distance."""
    n = mu.shape[0]
    if n < 2:
        d = np.full(max(n, 0), fallback)
    else:
        dist, _ = cKDTree(mu).query(mu, k=2)
        d = np.clip(dist[:, 1], 1e-4, None)
    return np.repeat(np.log(d)[:, None], 3, axis=1)


def initial_scene(mu: np.ndarray, colors: np.ndarray, background,
                  sh_degree: int = 0) -> Scene:
    """Scene with identity rotations, zero skew and tied 0.1 opacities."""
    mu = np.asarray(mu, dtype=np.float64).reshape(-1, 3)
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    n = mu.shape[0]
    k = (sh_degree + 1) ** 2
    sh = np.zeros((n, k, 3))
    sh[:, 0, :] = (colors - 0.5) / SH_C0
    logit = math.log(INIT_OPACITY / (1.0 - INIT_OPACITY))
    return Scene(
        mu=mu,
        log_scale=nn_log_scales(mu),
        rot=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
        sh=sh,
        opacity_logits=np.full((n, 2), logit),
        beta=np.zeros((n, 3)),
        dir=np.zeros((n, 3)),
        background=background,
        sh_degree=sh_degree,
    )
