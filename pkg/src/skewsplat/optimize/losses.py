"""Photometric loss with analytic pixel gradients, plus scene regularizers.

The total training loss is

    L = (1 - lambda_ssim) * L1 + lambda_ssim * (1 - SSIM)
        + lambda_beta_reg * sum_i ||beta_i||^2
        + lambda_opacity_reg * sum_i |sigmoid(l1_i) - sigmoid(l2_i)|

The image terms differentiate to a per-pixel gradient; the regularizers
differentiate directly to the skewness and opacity-logit parameters.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve

from ..kernel_math import sigmoid

_WIN = 11
_SIGMA = 1.5
_C1 = 0.01 ** 2
_C2 = 0.03 ** 2


def _window():
    x = np.arange(_WIN) - (_WIN - 1) / 2.0
    g = np.exp(-x * x / (2.0 * _SIGMA ** 2))
    g /= g.sum()
    return np.outer(g, g)


_W2D = _window()


def l1_loss(img: np.ndarray, target: np.ndarray):
    diff = img - target
    grad = np.sign(diff) / diff.size
    return float(np.abs(diff).mean()), grad


def ssim(img: np.ndarray, target: np.ndarray, grad: bool = False):
    """Mean SSIM over valid 11x11 windows, channels averaged.

    With `grad=True` also returns d(SSIM)/d(img).  The statistics use
    'valid' windows so the adjoint of each windowed mean is an exact 'full'
    convolution; no boundary padding heuristics enter the gradient.
    """
    if img.shape != target.shape:
        raise ValueError("image dimensions differ")
    orig_shape = img.shape
    if img.ndim == 2:
        img = img[..., None]
        target = target[..., None]
    h, w = img.shape[:2]
    if h < _WIN or w < _WIN:
        raise ValueError(f"images must be at least {_WIN}x{_WIN} for SSIM")

    total = 0.0
    d_img = np.zeros_like(img) if grad else None
    n_ch = img.shape[2]
    for ch in range(n_ch):
        x = img[..., ch]
        y = target[..., ch]
        mu_x = convolve(x, _W2D, mode="valid")
        mu_y = convolve(y, _W2D, mode="valid")
        wxx = convolve(x * x, _W2D, mode="valid")
        wyy = convolve(y * y, _W2D, mode="valid")
        wxy = convolve(x * y, _W2D, mode="valid")
        var_x = wxx - mu_x * mu_x
        var_y = wyy - mu_y * mu_y
        cov = wxy - mu_x * mu_y

        a1 = 2.0 * mu_x * mu_y + _C1
        a2 = 2.0 * cov + _C2
        b1 = mu_x * mu_x + mu_y * mu_y + _C1
        b2 = var_x + var_y + _C2
        s = (a1 * a2) / (b1 * b2)
        n = s.size * n_ch
        total += s.sum() / n

        if grad:
            # partials of mean(s) w.r.t. the windowed statistics
            g_a1 = a2 / (b1 * b2) / n
            g_a2 = a1 / (b1 * b2) / n
            g_b1 = -s / b1 / n
            g_b2 = -s / b2 / n
            g_mu_x = 2.0 * mu_y * g_a1 + 2.0 * mu_x * g_b1 \
                - 2.0 * mu_x * g_b2 - mu_y * 2.0 * g_a2
            g_wxx = g_b2
            g_wxy = 2.0 * g_a2
            d_img[..., ch] = convolve(g_mu_x, _W2D, mode="full") \
                + 2.0 * x * convolve(g_wxx, _W2D, mode="full") \
                + y * convolve(g_wxy, _W2D, mode="full")

    if grad:
        return total, d_img.reshape(orig_shape)
    return total


def image_loss(rendered: np.ndarray, target: np.ndarray, lambda_ssim: float):
    """(1 - lambda)*L1 + lambda*(1 - SSIM) and its pixel gradient."""
    if rendered.shape != target.shape:
        raise ValueError("image dimensions differ")
    l1, g1 = l1_loss(rendered, target)
    if lambda_ssim == 0.0:
        return l1, g1
    s, gs = ssim(rendered, target, grad=True)
    value = (1.0 - lambda_ssim) * l1 + lambda_ssim * (1.0 - s)
    grad = (1.0 - lambda_ssim) * g1 - lambda_ssim * gs
    return value, grad


def scene_regularizers(scene, cfg):
    """Skewness weight decay and opacity-pair L1 penalty.

    Returns the penalty value and direct gradients for beta and the
    opacity logits (zeros when the corresponding weight is 0).
    """
    value = 0.0
    d_beta = np.zeros_like(scene.beta)
    d_logits = np.zeros_like(scene.opacity_logits)
    if cfg.lambda_beta_reg > 0.0:
        value += cfg.lambda_beta_reg * float((scene.beta ** 2).sum())
        d_beta += 2.0 * cfg.lambda_beta_reg * scene.beta
    if cfg.lambda_opacity_reg > 0.0:
        sig = sigmoid(scene.opacity_logits)
        gap = sig[:, 0] - sig[:, 1]
        value += cfg.lambda_opacity_reg * float(np.abs(gap).sum())
        sgn = np.sign(gap)
        dsig = sig * (1.0 - sig)
        d_logits[:, 0] += cfg.lambda_opacity_reg * sgn * dsig[:, 0]
        d_logits[:, 1] += -cfg.lambda_opacity_reg * sgn * dsig[:, 1]
    return value, d_beta, d_logits


def loss(rendered: np.ndarray, target: np.ndarray, cfg, scene=None):
    """Full training loss.

    Returns (value, dL/dpixels, reg) where reg is None without a scene and
    otherwise the (d_beta, d_logits) pair from the regularizers.
    """
    value, grad = image_loss(rendered, target, cfg.lambda_ssim)
    if scene is None:
        return value, grad, None
    reg_value, d_beta, d_logits = scene_regularizers(scene, cfg)
    return value + reg_value, grad, (d_beta, d_logits)
