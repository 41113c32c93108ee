"""Fit a 1D skew-normal mixture to a sampled curve by gradient descent.

Desk-scale counterpart of the image pipeline.  The model is

    f(x) = sum_i  w_i * (2 / sigma_i) * phi(t_i) * Phi(beta_i * t_i),
    t_i  = (x - mu_i) / sigma_i,

with phi/Phi the standard normal pdf/cdf.  Every beta_i = 0 collapses the
mixture to a plain Gaussian mixture, so a run with skewness disabled is the
same model with beta frozen at its zero initialization.  Parameters are
(mu, log_sigma, beta, weight) per component; gradients are analytic and the
optimizer is the same Adam used by the scene fitter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .optimize.adam import ArrayAdam

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT1_2 = math.sqrt(0.5)

MIN_GRID = 64


class DivergenceError(RuntimeError):
    """Loss went non-finite even after the halved-step restart."""


def square_wave(x: np.ndarray, period: float = 3.0) -> np.ndarray:
    """0/1 square wave with 50% duty cycle and a rising edge at x = 0."""
    x = np.asarray(x, dtype=np.float64)
    return (np.mod(x / period, 1.0) < 0.5).astype(np.float64)


def skew_mixture(x, mu, sigma, beta, weight) -> np.ndarray:
    """Evaluate the mixture at the sample points x."""
    x = np.asarray(x, dtype=np.float64)
    t = (x[:, None] - np.asarray(mu)[None, :]) / np.asarray(sigma)[None, :]
    phi = np.exp(-0.5 * t * t) / SQRT_2PI
    cdf = 0.5 * (1.0 + erf(np.asarray(beta)[None, :] * t * SQRT1_2))
    k = 2.0 / np.asarray(sigma)[None, :] * phi * cdf
    return (np.asarray(weight)[None, :] * k).sum(axis=1)


def mixture_loss_grads(x, target, mu, log_sigma, beta, weight):
    """MSE against target plus analytic gradients for each parameter array.

    Returns (mse, grads) with grads keyed like the parameter dict.  The
    kernel is differentiated through t = (x - mu)/sigma:

        dk/dt = (2 phi / sigma) * (beta * phi(beta t) - t * Phi(beta t))

    and log_sigma picks up the extra -k term from the 1/sigma prefactor.
    """
    sigma = np.exp(log_sigma)
    t = (x[:, None] - mu[None, :]) / sigma[None, :]
    phi = np.exp(-0.5 * t * t) / SQRT_2PI
    bt = beta[None, :] * t
    pdf_bt = np.exp(-0.5 * bt * bt) / SQRT_2PI
    cdf = 0.5 * (1.0 + erf(bt * SQRT1_2))

    base = 2.0 / sigma[None, :] * phi
    k = base * cdf
    y = (weight[None, :] * k).sum(axis=1)

    resid = y - target
    mse = float(np.mean(resid * resid))
    dy = (2.0 / x.size) * resid

    dk_dt = base * (beta[None, :] * pdf_bt - t * cdf)
    w_dy = dy[:, None] * weight[None, :]
    grads = {
        "mu": (w_dy * dk_dt).sum(axis=0) * (-1.0 / sigma),
        "log_sigma": (w_dy * (-k - dk_dt * t)).sum(axis=0),
        "beta": (w_dy * base * t * pdf_bt).sum(axis=0),
        "weight": (dy[:, None] * k).sum(axis=0),
    }
    return mse, grads


@dataclass
class Fit1DResult:
    mu: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    weight: np.ndarray
    mse: float
    history: np.ndarray
    restarted: bool

    def curve(self, x: np.ndarray) -> np.ndarray:
        return skew_mixture(x, self.mu, self.sigma, self.beta, self.weight)


def _init_params(x, target, k, rng):
    span = float(x[-1] - x[0])
    centers = x[0] + span * (np.arange(k) + 0.5) / k
    jitter = rng.uniform(-0.2, 0.2, size=k) * span / k
    mass = float(np.trapezoid(np.abs(target), x))
    return {
        "mu": centers + jitter,
        "log_sigma": np.full(k, math.log(span / (2.0 * k))),
        "beta": np.zeros(k),
        "weight": np.full(k, max(mass, 1e-3) / k),
    }


def fit1d(x, target, k: int = 5, skew_enabled: bool = True,
          steps: int = 2000, lr: float = 0.05, seed: int = 0) -> Fit1DResult:
    """Fit k skew-normal components to target sampled at x.

    With skew_enabled=False the beta learning rate is zero, freezing every
    beta at 0 and reducing the model to a symmetric Gaussian mixture; the
    initialization is otherwise identical, so paired runs share their
    iteration-0 loss.  A non-finite loss aborts the run and restarts it once
    from the same initialization with every step size halved; a second
    divergence raises DivergenceError.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    target = np.ascontiguousarray(target, dtype=np.float64)
    if x.ndim != 1 or x.shape != target.shape:
        raise ValueError("x and target must be matching 1D arrays")
    if x.size < MIN_GRID:
        raise ValueError(f"need at least {MIN_GRID} samples, got {x.size}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if steps < 1:
        raise ValueError("steps must be >= 1")

    init = _init_params(x, target, k, np.random.default_rng(seed))

    restarted = False
    step_scale = 1.0
    while True:
        params = {name: arr.copy() for name, arr in init.items()}
        lrs = {name: lr * step_scale for name in params}
        if not skew_enabled:
            lrs["beta"] = 0.0
        opt = ArrayAdam(params, lrs)

        history = np.empty(steps + 1)
        diverged = False
        for it in range(steps):
            mse, grads = mixture_loss_grads(x, target, **params)
            history[it] = mse
            if not math.isfinite(mse):
                diverged = True
                break
            opt.step(grads)
        if not diverged:
            history[steps], _ = mixture_loss_grads(x, target, **params)
            if math.isfinite(history[steps]):
                break
            diverged = True
        if restarted:
            raise DivergenceError(
                "loss went non-finite again after halving the step size")
        warnings.warn("fit1d loss went non-finite; restarting once with "
                      "halved step size", RuntimeWarning, stacklevel=2)
        restarted = True
        step_scale = 0.5

    return Fit1DResult(
        mu=params["mu"],
        sigma=np.exp(params["log_sigma"]),
        beta=params["beta"],
        weight=params["weight"],
        mse=float(history[-1]),
        history=history,
        restarted=restarted,
    )
