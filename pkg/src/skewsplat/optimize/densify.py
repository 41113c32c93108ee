"""Adaptive density control: clone, split, and prune primitives.

A primitive is flagged for densification when its accumulated screen-space
positional gradient exceeds tau_uv or its depth gradient exceeds tau_z.
Small flagged primitives are cloned (the copy offset by one positional
gradient step); large ones are split in two along their longest world-space
axis.  Primitives whose opacity pair has decayed below prune_alpha are
removed, as are any whose accumulated screen radius exceeds the optional
cap.  The depth-gradient accumulator is zeroed in place afterwards.
"""

from __future__ import annotations

import math

import numpy as np

from ..kernel_math import sigmoid
from ..scene import quat_to_rotmat

SPLIT_SCALE_SHRINK = math.log(1.6)


def densify_and_prune(scene, stats, cfg, adam=None, max_radii=None):
    """Returns a report dict; mutates scene (and adam state) in place.

    `stats` carries per-primitive accumulators: g_uv (mean screen gradient),
    g_z (max depth gradient), d_mu (mean position gradient, used for the
    clone offset).  cfg.tau_z equal to nan means calibrate now: it is set
    once to the 90th percentile of the current g_z and reused afterwards.
    """
    n = len(scene)
    report = {"n_cloned": 0, "n_split": 0, "n_pruned": 0, "n_primitives": n}
    if n == 0:
        return report

    g_uv = np.asarray(stats.g_uv, dtype=np.float64)
    g_z = np.asarray(stats.g_z, dtype=np.float64)
    if math.isnan(cfg.tau_z):
        cfg.tau_z = float(np.percentile(g_z, 90.0)) if n else math.inf

    flagged = (g_uv > cfg.tau_uv) | (g_z > cfg.tau_z)
    max_scale = np.exp(scene.log_scale).max(axis=1)
    to_split = flagged & (max_scale > cfg.split_scale_threshold)
    to_clone = flagged & ~to_split

    # a zero positional step would duplicate a primitive exactly in place,
    # thickening its opacity without adding shape freedom; skip those
    offset = -cfg.position_lr_at(cfg.densify_start) * np.asarray(stats.d_mu)
    to_clone &= np.linalg.norm(offset, axis=1) > 0.0

    sig = sigmoid(scene.opacity_logits)
    prune = sig.max(axis=1) < cfg.prune_alpha
    if max_radii is not None and cfg.max_screen_radius is not None:
        prune |= np.asarray(max_radii) > cfg.max_screen_radius
    keep = ~prune & ~to_split
    report["n_pruned"] = int(prune.sum())

    clone_idx = np.flatnonzero(to_clone & ~prune)
    split_idx = np.flatnonzero(to_split & ~prune)
    report["n_cloned"] = clone_idx.size
    report["n_split"] = split_idx.size

    new = {f: [] for f in ("mu", "log_scale", "rot", "sh", "opacity_logits",
                           "beta", "dir")}

    for i in clone_idx:
        new["mu"].append(scene.mu[i] + offset[i])
        new["log_scale"].append(scene.log_scale[i].copy())
        new["rot"].append(scene.rot[i].copy())
        new["sh"].append(scene.sh[i].copy())
        new["opacity_logits"].append(scene.opacity_logits[i].copy())
        new["beta"].append(scene.beta[i].copy())
        new["dir"].append(scene.dir[i].copy())

    for i in split_idx:
        R = quat_to_rotmat(scene.rot[i][None])[0]
        k = int(np.argmax(scene.log_scale[i]))
        axis = R[:, k]
        half = 0.5 * math.exp(scene.log_scale[i][k])
        child_scale = scene.log_scale[i] - SPLIT_SCALE_SHRINK
        eta = scene.beta[i] + scene.dir[i]
        l_hi = scene.opacity_logits[i].max()
        l_lo = scene.opacity_logits[i].min()
        # the density enhancement sits on the eta . (x - mu) > 0 side; the
        # child on that side carries the larger opacity
        plus_near_mode = float(eta @ axis) >= 0.0
        for sign in (1.0, -1.0):
            near = (sign > 0) == plus_near_mode
            lv = l_hi if near else l_lo
            new["mu"].append(scene.mu[i] + sign * half * axis)
            new["log_scale"].append(child_scale.copy())
            new["rot"].append(scene.rot[i].copy())
            new["sh"].append(scene.sh[i].copy())
            new["opacity_logits"].append(np.array([lv, lv]))
            new["beta"].append(scene.beta[i].copy())
            new["dir"].append(scene.dir[i].copy())

    n_added = len(new["mu"])
    for f in new:
        old = getattr(scene, f)[keep]
        if n_added:
            setattr(scene, f, np.concatenate([old, np.stack(new[f])], axis=0))
        else:
            setattr(scene, f, old)

    if adam is not None:
        adam.prune(keep)
        adam.extend(n_added)

    report["n_primitives"] = len(scene)
    for f in ("mu", "log_scale", "rot", "sh", "opacity_logits", "beta", "dir"):
        if not np.all(np.isfinite(getattr(scene, f))):
            raise FloatingPointError(f"densification produced non-finite {f}")
    stats.g_z[...] = 0.0
    return report
