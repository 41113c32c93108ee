"""Training configuration shared by the fitting entry points."""

from __future__ import annotations

import dataclasses
import math


@dataclasses.dataclass
class TrainConfig:
    """Learning rates, loss weights, and densification thresholds.

    `tau_z` defaults to nan, meaning "calibrate from data": the controller
    sets it once to the 90th percentile of the depth-gradient statistic
    accumulated over the first densification interval.  Use `math.inf` to
    disable the depth criterion entirely.
    """

    lr_position: float = 1e-3
    lr_position_final: float | None = None  # exponential decay target
    lr_scale: float = 5e-3
    lr_rot: float = 2e-3
    lr_opacity: float = 2.5e-2
    lr_sh: float = 2.5e-3
    lr_beta: float = 1e-4  # shared by both skewness fields
    tau_uv: float = 1e-3
    tau_z: float = math.nan
    densify_interval: int = 100
    densify_start: int = 500
    densify_end: int = 15000
    prune_alpha: float = 5e-3
    split_scale_threshold: float = 0.05
    max_screen_radius: float | None = None
    lambda_ssim: float = 0.2
    lambda_beta_reg: float = 1e-4
    lambda_opacity_reg: float = 1e-3
    iterations: int = 3000
    seed: int = 0

    def validate(self):
        for name in ("lr_position", "lr_scale", "lr_rot", "lr_opacity",
                     "lr_sh"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        # lr_beta may be 0: that freezes skewness, giving the symmetric model
        for name in ("lr_beta", "tau_uv", "prune_alpha", "split_scale_threshold",
                     "lambda_ssim", "lambda_beta_reg", "lambda_opacity_reg"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (math.isnan(self.tau_z) or self.tau_z >= 0):
            raise ValueError("tau_z must be >= 0, nan (auto), or inf")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        return self

    def position_lr_at(self, iteration: int) -> float:
        if self.lr_position_final is None:
            return self.lr_position
        t = min(max(iteration / max(self.iterations, 1), 0.0), 1.0)
        return self.lr_position * (self.lr_position_final / self.lr_position) ** t
