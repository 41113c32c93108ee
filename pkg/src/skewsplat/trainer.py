"""Multi-view training loop: render, loss, backward, step, periodic densify.

Each iteration fits one training view chosen by the seeded RNG.  Positional
screen gradients are averaged and depth gradients max-pooled over the
current densification interval, then handed to the clone/split/prune
controller between densify_start and densify_end.  Progress is reported as
one JSON object per log interval on an optional line-delimited stream.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from types import SimpleNamespace

import numpy as np

from .dataset import Dataset
from .fit2d import training_step
from .initialize import initial_scene
from .metrics import compare, psnr
from .optimize import Adam, TrainConfig, densify_and_prune
from .projection import project_scene
from .raster.forward import render_forward
from .scene import Scene


@dataclasses.dataclass
class TrainResult:
    scene: Scene
    log: list[dict]
    test_psnr: float | None
    test_ssim: float | None
    diverged_at: int | None
    n_skipped: int


class _IntervalStats:
    """Densify statistics accumulated since the last controller run."""

    def __init__(self, n: int):
        self.uv_sum = np.zeros(n)
        self.z_max = np.zeros(n)
        self.mu_sum = np.zeros((n, 3))
        self.steps = 0

    def add(self, grads):
        self.uv_sum += grads.g_uv
        np.maximum(self.z_max, grads.g_z, out=self.z_max)
        self.mu_sum += grads.d_mu
        self.steps += 1

    def bundle(self):
        denom = max(self.steps, 1)
        return SimpleNamespace(g_uv=self.uv_sum / denom, g_z=self.z_max,
                               d_mu=self.mu_sum / denom)


def init_multiview_scene(dataset: Dataset, n_init: int, sh_degree: int,
                         rng: np.random.Generator) -> Scene:
    """Uniform positions in the unit box, background from the pixel median.

    In an object-on-background capture most pixels are background, so the
    per-channel median of the training pixels estimates it far better than
    the mean; a good background estimate keeps the optimizer from spending
    huge low-opacity primitives painting empty space, which generalizes
    badly to held-out views.
    """
    train = dataset.train
    pixels = np.concatenate([img.reshape(-1, 3) for img, _ in train], axis=0)
    background = np.median(pixels, axis=0)
    mean_color = pixels.mean(axis=0)
    positions = rng.uniform(-1.0, 1.0, (n_init, 3))
    colors = np.tile(mean_color, (n_init, 1))
    return initial_scene(positions, colors, background=background,
                         sh_degree=sh_degree)


def evaluate(scene: Scene, pairs) -> tuple[float, float]:
    """Mean PSNR/SSIM of the scene's renders against (image, view) pairs."""
    scores = [compare(render_forward(scene, view).color, img)
              for img, view in pairs]
    return (float(np.mean([s.psnr for s in scores])),
            float(np.mean([s.ssim for s in scores])))


def fit_multiview(dataset: Dataset, cfg: TrainConfig | None = None,
                  n_init: int = 100, sh_degree: int = 0,
                  skew_enabled: bool = True, densify: bool = True,
                  log_every: int = 100, log_stream=None) -> TrainResult:
    """Train a scene on the dataset's training split and score the test split.

    With skew_enabled=False the skewness learning rate is zeroed as in the
    single-view fitter.  densify=False holds the primitive count fixed for
    ablations.  Returns the final scene plus the interval log and held-out
    metrics (None when the test split is empty).
    """
    cfg = dataclasses.replace(cfg) if cfg is not None else TrainConfig()
    if not skew_enabled:
        cfg.lr_beta = 0.0
    cfg.validate()
    if n_init < 1:
        raise ValueError("n_init must be >= 1")

    rng = np.random.default_rng(cfg.seed)
    train = dataset.train
    scene = init_multiview_scene(dataset, n_init, sh_degree, rng)
    adam = Adam(scene, cfg)
    stats = _IntervalStats(len(scene))

    log: list[dict] = []
    counts = {"n_cloned": 0, "n_split": 0, "n_pruned": 0}
    diverged_at = None

    def emit(iteration, value, frame_psnr):
        entry = {"iteration": iteration, "loss": float(value),
                 "psnr": frame_psnr, "n_primitives": len(scene), **counts}
        log.append(entry)
        if log_stream is not None:
            log_stream.write(json.dumps(entry) + "\n")
            log_stream.flush()
        for key in counts:
            counts[key] = 0

    for it in range(cfg.iterations):
        img, view = train[rng.integers(len(train))]
        value, frame = training_step(scene, view, img, cfg, adam, it, stats)
        if it % log_every == 0:
            emit(it, value, psnr(frame.color, img))
        if not math.isfinite(value):
            warnings.warn(f"loss went non-finite at iteration {it}; stopping "
                          "early", RuntimeWarning, stacklevel=2)
            diverged_at = it
            break
        if (densify and it > 0 and cfg.densify_start <= it <= cfg.densify_end
                and it % cfg.densify_interval == 0 and stats.steps > 0):
            max_radii = None
            if cfg.max_screen_radius is not None:
                max_radii = project_scene(scene, view, 0.3).radius
            report = densify_and_prune(scene, stats.bundle(), cfg, adam=adam,
                                       max_radii=max_radii)
            for key in counts:
                counts[key] += report[key]
            stats = _IntervalStats(len(scene))

    test_psnr = test_ssim = None
    if dataset.test:
        test_psnr, test_ssim = evaluate(scene, dataset.test)
    return TrainResult(scene=scene, log=log, test_psnr=test_psnr,
                       test_ssim=test_ssim, diverged_at=diverged_at,
                       n_skipped=adam.n_skipped)
