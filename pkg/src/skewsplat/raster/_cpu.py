"""Pure numpy blend kernels, vectorized over each tile's pixel block.

These are the portable reference kernels; the compiled extension carries the
same arithmetic per pixel.  Tiles are independent (a pixel belongs to exactly
one tile and an instance to exactly one tile range), so any parallel schedule
over tiles reproduces this sequential result bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from ..kernel_math import ALPHA_MAX, ALPHA_SKIP, T_STOP, erf

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _tile_pixels(tile_id, ntx, width, height):
    ty, tx = divmod(tile_id, ntx)
    c0, r0 = tx * 16, ty * 16
    c1, r1 = min(c0 + 16, width), min(r0 + 16, height)
    px = np.arange(c0, c1) + 0.5
    py = np.arange(r0, r1) + 0.5
    PX, PY = np.meshgrid(px, py)
    return r0, r1, c0, c1, PX.ravel(), PY.ravel()


def forward_tiles(mean2d, conic, skew2d, opair, color, inst_prim, ranges,
                  tiles_x, width, height, background):
    img = np.tile(np.asarray(background, dtype=np.float64), (height, width, 1))
    final_T = np.ones((height, width))
    n_contrib = np.zeros((height, width), dtype=np.int32)
    last_idx = np.full((height, width), -1, dtype=np.int64)

    for tile_id in range(ranges.shape[0]):
        start, end = ranges[tile_id]
        if end <= start:
            continue
        r0, r1, c0, c1, PX, PY = _tile_pixels(tile_id, tiles_x, width, height)
        P = PX.size
        T = np.ones(P)
        C = np.zeros((P, 3))
        nc = np.zeros(P, dtype=np.int32)
        li = np.full(P, -1, dtype=np.int64)
        stopped = np.zeros(P, dtype=bool)

        for k in range(start, end):
            i = inst_prim[k]
            dx = PX - mean2d[i, 0]
            dy = PY - mean2d[i, 1]
            a, b, c = conic[i]
            power = -0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy
            z = (skew2d[i, 0] * dx + skew2d[i, 1] * dy) * _SQRT1_2
            E = 1.0 + erf(z)
            o1, o2 = opair[i]
            o = 0.5 * ((o1 + o2) + (o1 - o2) * (E - 1.0))
            alpha = np.minimum(o * np.exp(power) * E, ALPHA_MAX)

            live = ~stopped & (power <= 0.0) & (alpha >= ALPHA_SKIP)
            if not live.any():
                continue
            test_T = T * (1.0 - alpha)
            halting = live & (test_T < T_STOP)
            blend = live & ~halting
            w = np.where(blend, alpha * T, 0.0)
            C += w[:, None] * color[i]
            T = np.where(blend, test_T, T)
            nc += blend
            li = np.where(blend, k, li)
            stopped |= halting
            if stopped.all():
                break

        shape = (r1 - r0, c1 - c0)
        img[r0:r1, c0:c1] = (C + T[:, None] * np.asarray(background)).reshape(shape + (3,))
        final_T[r0:r1, c0:c1] = T.reshape(shape)
        n_contrib[r0:r1, c0:c1] = nc.reshape(shape)
        last_idx[r0:r1, c0:c1] = li.reshape(shape)

    return img, final_T, n_contrib, last_idx


def backward_tiles(mean2d, conic, skew2d, opair, color, inst_prim, ranges,
                   tiles_x, width, height, background, final_T, last_idx, dL_dpix):
    """Back-to-front replay; returns per-instance gradient slots (M, 12).

    Slot layout: d_mean_x, d_mean_y, d_a, d_b, d_c, d_skew_x, d_skew_y,
    d_o1, d_o2, d_color_rgb.  The suffix color accumulator starts at the
    background, which folds the final T*bg compositing term into the same
    recurrence as the blended splats.
    """
    slots = np.zeros((inst_prim.shape[0], 12))
    bg = np.asarray(background, dtype=np.float64)

    for tile_id in range(ranges.shape[0]):
        start, end = ranges[tile_id]
        if end <= start:
            continue
        r0, r1, c0, c1, PX, PY = _tile_pixels(tile_id, tiles_x, width, height)
        li = last_idx[r0:r1, c0:c1].ravel()
        if not (li >= 0).any():
            continue
        T = final_T[r0:r1, c0:c1].ravel().copy()
        dc = dL_dpix[r0:r1, c0:c1].reshape(-1, 3)
        R = np.tile(bg, (PX.size, 1))

        for k in range(end - 1, start - 1, -1):
            active = li >= k
            if not active.any():
                continue
            i = inst_prim[k]
            dx = PX - mean2d[i, 0]
            dy = PY - mean2d[i, 1]
            a, b, c = conic[i]
            power = -0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy
            z = (skew2d[i, 0] * dx + skew2d[i, 1] * dy) * _SQRT1_2
            E = 1.0 + erf(z)
            o1, o2 = opair[i]
            o = 0.5 * ((o1 + o2) + (o1 - o2) * (E - 1.0))
            G = np.exp(power)
            A = o * G * E
            alpha = np.minimum(A, ALPHA_MAX)

            blended = active & (power <= 0.0) & (alpha >= ALPHA_SKIP)
            if not blended.any():
                continue
            T = np.where(blended, T / (1.0 - alpha), T)

            d_alpha = np.where(blended, T * ((color[i][None, :] - R) * dc).sum(axis=1), 0.0)
            aT = np.where(blended, alpha * T, 0.0)
            d_col = aT[:, None] * dc

            gate = A <= ALPHA_MAX
            DA = np.where(gate, d_alpha, 0.0)
            d_power = DA * A
            ez2 = np.exp(-z * z)
            d_z = DA * G * _TWO_OVER_SQRT_PI * ez2 * (o + 0.5 * (o1 - o2) * E)
            d_dx = d_power * (-(a * dx + b * dy)) + d_z * skew2d[i, 0] * _SQRT1_2
            d_dy = d_power * (-(c * dy + b * dx)) + d_z * skew2d[i, 1] * _SQRT1_2

            row = slots[k]
            row[0] += -d_dx.sum()
            row[1] += -d_dy.sum()
            row[2] += (d_power * (-0.5 * dx * dx)).sum()
            row[3] += (d_power * (-dx * dy)).sum()
            row[4] += (d_power * (-0.5 * dy * dy)).sum()
            row[5] += (d_z * dx * _SQRT1_2).sum()
            row[6] += (d_z * dy * _SQRT1_2).sum()
            row[7] += (DA * 0.5 * G * E * E).sum()
            row[8] += (DA * 0.5 * (2.0 - E) * G * E).sum()
            row[9:12] += d_col.sum(axis=0)

            R = np.where(blended[:, None], alpha[:, None] * color[i][None, :] + (1.0 - alpha[:, None]) * R, R)

    return slots
