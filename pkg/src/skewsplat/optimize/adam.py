"""Adaptive moment estimation written from scratch for this pipeline.

Two layers: ArrayAdam updates a flat dict of named arrays (used by the 1D
fitter and anywhere else a plain parameter vector appears); Adam binds the
scene fields to their learning rates, skips primitives whose gradients are
not finite, renormalizes quaternions after every step, and remaps its moment
state when densification reorders the primitive set.
"""

from __future__ import annotations

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-15

# scene field -> gradient bundle attribute
FIELD_GRADS = {
    "mu": "d_mu",
    "log_scale": "d_log_scale",
    "rot": "d_rot",
    "sh": "d_sh",
    "opacity_logits": "d_opacity_logits",
    "beta": "d_beta",
    "dir": "d_dir",
}


class ArrayAdam:
    """Bias-corrected first/second moment updates over named arrays."""

    def __init__(self, params: dict[str, np.ndarray], lrs: dict[str, float]):
        self.params = params
        self.lrs = dict(lrs)
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]):
        self.t += 1
        c1 = 1.0 - BETA1 ** self.t
        c2 = 1.0 - BETA2 ** self.t
        for k, g in grads.items():
            if self.lrs.get(k, 0.0) == 0.0:
                continue
            m, v = self.m[k], self.v[k]
            m += (1.0 - BETA1) * (g - m)
            v += (1.0 - BETA2) * (g * g - v)
            self.params[k] -= self.lrs[k] * (m / c1) / (np.sqrt(v / c2) + EPS)


class Adam:
    """Scene-bound optimizer with the contract the train loop relies on."""

    def __init__(self, scene, cfg):
        self.cfg = cfg
        self.t = 0
        self.n_skipped = 0
        self.m = {f: np.zeros_like(getattr(scene, f)) for f in FIELD_GRADS}
        self.v = {f: np.zeros_like(getattr(scene, f)) for f in FIELD_GRADS}

    def _lr(self, field: str, iteration: int) -> float:
        cfg = self.cfg
        if field == "mu":
            return cfg.position_lr_at(iteration)
        return {"log_scale": cfg.lr_scale, "rot": cfg.lr_rot,
                "sh": cfg.lr_sh, "opacity_logits": cfg.lr_opacity,
                "beta": cfg.lr_beta, "dir": cfg.lr_beta}[field]

    def step(self, scene, grads, iteration: int):
        n = len(scene)
        if n == 0:
            return
        ok = np.ones(n, dtype=bool)
        for field, gname in FIELD_GRADS.items():
            g = getattr(grads, gname)
            ok &= np.isfinite(g).reshape(n, -1).all(axis=1)
        self.n_skipped += int(n - ok.sum())

        self.t += 1
        c1 = 1.0 - BETA1 ** self.t
        c2 = 1.0 - BETA2 ** self.t
        for field, gname in FIELD_GRADS.items():
            g = getattr(grads, gname)[ok]
            m, v = self.m[field], self.v[field]
            m[ok] = BETA1 * m[ok] + (1.0 - BETA1) * g
            v[ok] = BETA2 * v[ok] + (1.0 - BETA2) * g * g
            upd = self._lr(field, iteration) * (m[ok] / c1) / (np.sqrt(v[ok] / c2) + EPS)
            getattr(scene, field)[ok] -= upd

        # renormalize only drifted rows so a zero-gradient step is a no-op
        norm = np.linalg.norm(scene.rot, axis=1)
        drifted = np.abs(norm - 1.0) > 1e-12
        degenerate = norm <= 1e-12
        scene.rot[drifted & ~degenerate] /= norm[drifted & ~degenerate, None]
        scene.rot[degenerate] = np.array([1.0, 0.0, 0.0, 0.0])

    def prune(self, keep: np.ndarray):
        for f in FIELD_GRADS:
            self.m[f] = self.m[f][keep]
            self.v[f] = self.v[f][keep]

    def extend(self, n_new: int):
        if n_new <= 0:
            return
        for f in FIELD_GRADS:
            pad = np.zeros((n_new,) + self.m[f].shape[1:])
            self.m[f] = np.concatenate([self.m[f], pad], axis=0)
            self.v[f] = np.concatenate([self.v[f], pad], axis=0)
