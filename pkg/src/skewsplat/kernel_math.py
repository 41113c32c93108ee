"""Scalar kernel math for skew-Gaussian splats.

Everything in this module is a pure function of its arguments and works
transparently on floats or numpy arrays.  The rasterizer backends inline
the same formulas; this module is the readable reference for them and the
entry point the tests probe.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# Blending / clamping constants shared by both rasterizer backends.
ALPHA_MAX = 0.99        # cap on per-splat alpha before compositing
ALPHA_SKIP = 1.0 / 255  # splats dimmer than one 8-bit step are skipped
T_STOP = 1e-4           # transmittance below this terminates the pixel
BETA_CLAMP = 20.0       # |beta| beyond this saturates erf; keep grads finite

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class Conic(NamedTuple):
    """Upper triangle (a, b, c) of an inverse 2D covariance matrix."""

    a: float
    b: float
    c: float


class Skew2D(NamedTuple):
    """Screen-space skewness coefficients."""

    beta_x: float
    beta_y: float


# --- error function -------------------------------------------------------

# Near-machine-precision erf, written out so the compiled kernel can carry
# the identical arithmetic.  A lower-accuracy rational fit is not an option:
# the backward pass is validated against finite differences of the forward
# values, so the *derivative* of the approximation error must stay far below
# erf'(z), which decays like exp(-z^2).
#
# |x| <= 2:  odd Maclaurin polynomial, 33 terms in u = x^2 (exact 0 at 0;
#            truncation < 1e-17, round-off ~ 1e-15).
# 2 < |x| < 6.5: continued fraction for erfc, depth 48.
# |x| >= 6.5: +-1 (erfc < 1e-19, below one ulp of 1).
_ERF_SERIES_CUT = 2.0
_ERF_TAIL_CUT = 6.5
_ERF_CF_DEPTH = 48
_ERF_COEF = np.array(
    [(-1.0) ** n / (math.factorial(n) * (2 * n + 1)) for n in range(33)],
    dtype=np.float64,
)


def _erf_series(x):
    u = x * x
    poly = np.zeros_like(u) if isinstance(u, np.ndarray) else 0.0
    for c in _ERF_COEF[::-1]:
        poly = poly * u + c
    return _TWO_OVER_SQRT_PI * x * poly


def _erfc_cf_scalar(x: float) -> float:
    # sqrt(pi)*exp(x^2)*erfc(x) = 1/(x+ (1/2)/(x+ 1/(x+ (3/2)/(x+ ...))))
    t = 0.0
    for k in range(_ERF_CF_DEPTH, 0, -1):
        t = (0.5 * k) / (x + t)
    return math.exp(-x * x) / math.sqrt(math.pi) / (x + t)


def erf(x):
    """Error function; absolute error below 1e-13, erf(0) == 0 exactly."""
    if isinstance(x, np.ndarray):
        ax = np.abs(x)
        y = _erf_series(np.minimum(ax, _ERF_SERIES_CUT))
        tail = ax > _ERF_SERIES_CUT
        if np.any(tail):
            vals = np.array([
                1.0 if v >= _ERF_TAIL_CUT else 1.0 - _erfc_cf_scalar(float(v))
                for v in ax[tail]
            ])
            y[tail] = vals
        return np.where(x < 0, -y, y)
    ax = abs(x)
    if ax <= _ERF_SERIES_CUT:
        y = _erf_series(ax)
    elif ax < _ERF_TAIL_CUT:
        y = 1.0 - _erfc_cf_scalar(ax)
    else:
        y = 1.0
    return -y if x < 0 else y


def erf_prime(x):
    """Derivative of erf: 2/sqrt(pi) * exp(-x^2)."""
    return _TWO_OVER_SQRT_PI * np.exp(-np.asarray(x, dtype=np.float64) ** 2)


def phi_std(z):
    """Standard normal CDF."""
    return 0.5 * (1.0 + erf(z * _SQRT1_2))


# --- skewed falloff kernel ------------------------------------------------


def gauss_power(dx, dy, conic: Conic):
    """Exponent of the 2D Gaussian falloff: -(a*dx^2 + c*dy^2)/2 - b*dx*dy."""
    return -0.5 * (conic.a * dx * dx + conic.c * dy * dy) - conic.b * dx * dy


def skew_arg(dx, dy, skew: Skew2D):
    """z = (beta_x*dx + beta_y*dy) / sqrt(2), the erf argument."""
    return (skew.beta_x * dx + skew.beta_y * dy) * _SQRT1_2


def eval_skew_alpha(dx, dy, conic: Conic, skew: Skew2D, d):
    """Modulated opacity d * G'(dx,dy) * (1 + erf(z)), clamped to [0, ALPHA_MAX].

    The (1 + erf) form absorbs both the factor 2 of the skew-normal density
    and the 1/2 of the normal CDF.  With skew = (0, 0) this is exactly the
    plain Gaussian falloff times d.
    """
    power = gauss_power(dx, dy, conic)
    alpha = d * np.exp(power) * (1.0 + erf(skew_arg(dx, dy, skew)))
    return np.clip(alpha, 0.0, ALPHA_MAX)


def skew_grad_beta(dx, dy, conic: Conic, skew: Skew2D):
    """Gradient of G'*(1+erf(z)) with respect to (beta_x, beta_y).

    Both components share the factor sqrt(2/pi) * exp(power - z^2); the
    per-component factor is the pixel offset along that axis.
    """
    z = skew_arg(dx, dy, skew)
    common = _SQRT_2_OVER_PI * np.exp(gauss_power(dx, dy, conic) - z * z)
    return dx * common, dy * common


def mix_opacity(o1, o2, z):
    """Position-dependent base opacity 0.5*((o1+o2) + (o1-o2)*erf(z)).

    Interpolates between the two region opacities across the boundary the
    skew argument z defines: z -> -inf gives o2, z -> +inf gives o1.
    """
    e = erf(z)
    return 0.5 * ((o1 + o2) + (o1 - o2) * e)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def inverse_sigmoid(y):
    y = np.asarray(y, dtype=np.float64)
    return np.log(y / (1.0 - y))
