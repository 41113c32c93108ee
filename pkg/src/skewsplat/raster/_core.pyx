# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled blend kernels: the per-pixel hot loops of both rasterizer passes.

Mirrors raster/_cpu.py operation for operation.  Tiles run in parallel under
OpenMP; every tile's instance list stays strictly sequential and tiles own
disjoint pixels and instance ranges, so the output is bit-identical for any
thread count and matches the numpy backend to floating-point noise.
"""

import math

import numpy as np

cimport numpy as cnp
cimport openmp
from cython.parallel cimport prange
from libc.math cimport exp as c_exp, fabs

cnp.import_array()

CORE_BUILD = 1
KERNELS = 1

cdef double ALPHA_MAX = 0.99
cdef double ALPHA_SKIP = 1.0 / 255.0
cdef double T_STOP = 1e-4
cdef double SQRT1_2 = 0.7071067811865476          # 1/sqrt(2)
cdef double TWO_OVER_SQRT_PI = 1.1283791670955126  # 2/sqrt(pi)
cdef double SQRT_PI = 1.7724538509055159

# erf coefficients are generated exactly as in kernel_math so both backends
# evaluate the same polynomial
cdef double[33] ERF_COEF
for _n in range(33):
    ERF_COEF[_n] = (-1.0) ** _n / (math.factorial(_n) * (2 * _n + 1))


def set_num_threads(int n):
    openmp.omp_set_num_threads(n)


def get_max_threads():
    return openmp.omp_get_max_threads()


def erf_probe(x):
    """Evaluate the compiled erf on an array; exists for parity tests."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = c_erf(xv[i])
    return out.reshape(np.shape(x))


cdef inline double c_erf(double x) nogil:
    cdef double ax = fabs(x)
    cdef double u, poly, t, y
    cdef int k
    if ax <= 2.0:
        u = ax * ax
        poly = 0.0
        for k in range(32, -1, -1):
            poly = poly * u + ERF_COEF[k]
        y = TWO_OVER_SQRT_PI * ax * poly
    elif ax < 6.5:
        t = 0.0
        for k in range(48, 0, -1):
            t = (0.5 * k) / (ax + t)
        y = 1.0 - c_exp(-ax * ax) / SQRT_PI / (ax + t)
    else:
        y = 1.0
    return -y if x < 0.0 else y


cdef void _forward_tile(int tile_id, double[:, ::1] mean2d, double[:, ::1] conic,
                        double[:, ::1] skew2d, double[:, ::1] opair,
                        double[:, ::1] color, cnp.int64_t[::1] inst_prim,
                        cnp.int64_t[:, ::1] ranges, int tiles_x,
                        int width, int height,
                        double bg0, double bg1, double bg2,
                        double[:, :, ::1] img, double[:, ::1] final_T,
                        cnp.int32_t[:, ::1] n_contrib,
                        cnp.int64_t[:, ::1] last_idx) nogil:
    cdef double T[256]
    cdef double C[768]
    cdef int nc[256]
    cdef cnp.int64_t li[256]
    cdef unsigned char stopped[256]

    cdef cnp.int64_t start = ranges[tile_id, 0]
    cdef cnp.int64_t end = ranges[tile_id, 1]
    if end <= start:
        return

    cdef int ty = tile_id // tiles_x
    cdef int tx = tile_id - ty * tiles_x
    cdef int c0 = tx * 16, r0 = ty * 16
    cdef int c1 = c0 + 16, r1 = r0 + 16
    if c1 > width: c1 = width
    if r1 > height: r1 = height
    cdef int ncols = c1 - c0
    cdef int P = (r1 - r0) * ncols

    cdef int p, row, col, n_stopped = 0
    for p in range(P):
        T[p] = 1.0
        C[3 * p] = 0.0
        C[3 * p + 1] = 0.0
        C[3 * p + 2] = 0.0
        nc[p] = 0
        li[p] = -1
        stopped[p] = 0

    cdef cnp.int64_t k, i
    cdef double mx, my, a, b, cc, sx, sy, o1, o2, cr, cg, cb
    cdef double dx, dy, power, z, E, o, A, alpha, test_T, w
    for k in range(start, end):
        i = inst_prim[k]
        mx = mean2d[i, 0]; my = mean2d[i, 1]
        a = conic[i, 0]; b = conic[i, 1]; cc = conic[i, 2]
        sx = skew2d[i, 0]; sy = skew2d[i, 1]
        o1 = opair[i, 0]; o2 = opair[i, 1]
        cr = color[i, 0]; cg = color[i, 1]; cb = color[i, 2]
        for p in range(P):
            if stopped[p]:
                continue
            row = p // ncols
            col = p - row * ncols
            dx = (c0 + col + 0.5) - mx
            dy = (r0 + row + 0.5) - my
            power = -0.5 * (a * dx * dx + cc * dy * dy) - b * dx * dy
            if power > 0.0:
                continue
            z = (sx * dx + sy * dy) * SQRT1_2
            E = 1.0 + c_erf(z)
            o = 0.5 * ((o1 + o2) + (o1 - o2) * (E - 1.0))
            A = o * c_exp(power) * E
            alpha = A if A < ALPHA_MAX else ALPHA_MAX
            if alpha < ALPHA_SKIP:
                continue
            test_T = T[p] * (1.0 - alpha)
            if test_T < T_STOP:
                stopped[p] = 1
                n_stopped += 1
                continue
            w = alpha * T[p]
            C[3 * p] += w * cr
            C[3 * p + 1] += w * cg
            C[3 * p + 2] += w * cb
            T[p] = test_T
            nc[p] += 1
            li[p] = k
        if n_stopped == P:
            break

    for p in range(P):
        row = r0 + p // ncols
        col = c0 + p - (p // ncols) * ncols
        img[row, col, 0] = C[3 * p] + T[p] * bg0
        img[row, col, 1] = C[3 * p + 1] + T[p] * bg1
        img[row, col, 2] = C[3 * p + 2] + T[p] * bg2
        final_T[row, col] = T[p]
        n_contrib[row, col] = nc[p]
        last_idx[row, col] = li[p]


def forward_tiles(mean2d, conic, skew2d, opair, color, inst_prim, ranges,
                  tiles_x, width, height, background):
    cdef double[:, ::1] mean2d_v = np.ascontiguousarray(mean2d, dtype=np.float64)
    cdef double[:, ::1] conic_v = np.ascontiguousarray(conic, dtype=np.float64)
    cdef double[:, ::1] skew2d_v = np.ascontiguousarray(skew2d, dtype=np.float64)
    cdef double[:, ::1] opair_v = np.ascontiguousarray(opair, dtype=np.float64)
    cdef double[:, ::1] color_v = np.ascontiguousarray(color, dtype=np.float64)
    cdef cnp.int64_t[::1] prim_v = np.ascontiguousarray(inst_prim, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ranges_v = np.ascontiguousarray(ranges, dtype=np.int64)

    bg = np.asarray(background, dtype=np.float64).reshape(3)
    img = np.tile(bg, (height, width, 1))
    final_T_arr = np.ones((height, width))
    n_contrib_arr = np.zeros((height, width), dtype=np.int32)
    last_idx_arr = np.full((height, width), -1, dtype=np.int64)

    cdef double[:, :, ::1] img_v = img
    cdef double[:, ::1] final_T_v = final_T_arr
    cdef cnp.int32_t[:, ::1] nc_v = n_contrib_arr
    cdef cnp.int64_t[:, ::1] li_v = last_idx_arr
    cdef double bg0 = bg[0], bg1 = bg[1], bg2 = bg[2]
    cdef int ntx = tiles_x, w = width, h = height
    cdef int n_tiles = ranges_v.shape[0]
    cdef int tid

    with nogil:
        for tid in prange(n_tiles, schedule="dynamic"):
            _forward_tile(tid, mean2d_v, conic_v, skew2d_v, opair_v, color_v,
                          prim_v, ranges_v, ntx, w, h, bg0, bg1, bg2,
                          img_v, final_T_v, nc_v, li_v)

    return img, final_T_arr, n_contrib_arr, last_idx_arr


cdef void _backward_tile(int tile_id, double[:, ::1] mean2d, double[:, ::1] conic,
                         double[:, ::1] skew2d, double[:, ::1] opair,
                         double[:, ::1] color, cnp.int64_t[::1] inst_prim,
                         cnp.int64_t[:, ::1] ranges, int tiles_x,
                         int width, int height,
                         double bg0, double bg1, double bg2,
                         double[:, ::1] final_T, cnp.int64_t[:, ::1] last_idx,
                         double[:, :, ::1] dL, double[:, ::1] slots) nogil:
    cdef double T[256]
    cdef double R[768]
    cdef double dc[768]
    cdef cnp.int64_t li[256]

    cdef cnp.int64_t start = ranges[tile_id, 0]
    cdef cnp.int64_t end = ranges[tile_id, 1]
    if end <= start:
        return

    cdef int ty = tile_id // tiles_x
    cdef int tx = tile_id - ty * tiles_x
    cdef int c0 = tx * 16, r0 = ty * 16
    cdef int c1 = c0 + 16, r1 = r0 + 16
    if c1 > width: c1 = width
    if r1 > height: r1 = height
    cdef int ncols = c1 - c0
    cdef int P = (r1 - r0) * ncols

    cdef int p, row, col
    cdef bint any_hit = 0
    for p in range(P):
        row = r0 + p // ncols
        col = c0 + p - (p // ncols) * ncols
        li[p] = last_idx[row, col]
        if li[p] >= 0:
            any_hit = 1
        T[p] = final_T[row, col]
        R[3 * p] = bg0
        R[3 * p + 1] = bg1
        R[3 * p + 2] = bg2
        dc[3 * p] = dL[row, col, 0]
        dc[3 * p + 1] = dL[row, col, 1]
        dc[3 * p + 2] = dL[row, col, 2]
    if not any_hit:
        return

    cdef cnp.int64_t k, i
    cdef double mx, my, a, b, cc, sx, sy, o1, o2, cr, cg, cb
    cdef double dx, dy, power, z, E, o, G, A, alpha
    cdef double d_alpha, aT, DA, d_power, ez2, d_z, d_dx, d_dy
    cdef double s0, s1, s2, s3, s4, s5, s6, s7, s8, s9, s10, s11
    for k in range(end - 1, start - 1, -1):
        i = inst_prim[k]
        mx = mean2d[i, 0]; my = mean2d[i, 1]
        a = conic[i, 0]; b = conic[i, 1]; cc = conic[i, 2]
        sx = skew2d[i, 0]; sy = skew2d[i, 1]
        o1 = opair[i, 0]; o2 = opair[i, 1]
        cr = color[i, 0]; cg = color[i, 1]; cb = color[i, 2]
        s0 = 0.0; s1 = 0.0; s2 = 0.0; s3 = 0.0; s4 = 0.0; s5 = 0.0
        s6 = 0.0; s7 = 0.0; s8 = 0.0; s9 = 0.0; s10 = 0.0; s11 = 0.0
        for p in range(P):
            if li[p] < k:
                continue
            row = p // ncols
            col = p - row * ncols
            dx = (c0 + col + 0.5) - mx
            dy = (r0 + row + 0.5) - my
            power = -0.5 * (a * dx * dx + cc * dy * dy) - b * dx * dy
            if power > 0.0:
                continue
            z = (sx * dx + sy * dy) * SQRT1_2
            E = 1.0 + c_erf(z)
            o = 0.5 * ((o1 + o2) + (o1 - o2) * (E - 1.0))
            G = c_exp(power)
            A = o * G * E
            alpha = A if A < ALPHA_MAX else ALPHA_MAX
            if alpha < ALPHA_SKIP:
                continue
            T[p] /= (1.0 - alpha)

            d_alpha = T[p] * ((cr - R[3 * p]) * dc[3 * p]
                              + (cg - R[3 * p + 1]) * dc[3 * p + 1]
                              + (cb - R[3 * p + 2]) * dc[3 * p + 2])
            aT = alpha * T[p]
            s9 += aT * dc[3 * p]
            s10 += aT * dc[3 * p + 1]
            s11 += aT * dc[3 * p + 2]

            DA = d_alpha if A <= ALPHA_MAX else 0.0
            d_power = DA * A
            ez2 = c_exp(-z * z)
            d_z = DA * G * TWO_OVER_SQRT_PI * ez2 * (o + 0.5 * (o1 - o2) * E)
            d_dx = d_power * (-(a * dx + b * dy)) + d_z * sx * SQRT1_2
            d_dy = d_power * (-(cc * dy + b * dx)) + d_z * sy * SQRT1_2
            s0 += -d_dx
            s1 += -d_dy
            s2 += d_power * (-0.5 * dx * dx)
            s3 += d_power * (-dx * dy)
            s4 += d_power * (-0.5 * dy * dy)
            s5 += d_z * dx * SQRT1_2
            s6 += d_z * dy * SQRT1_2
            s7 += DA * 0.5 * G * E * E
            s8 += DA * 0.5 * (2.0 - E) * G * E

            R[3 * p] = alpha * cr + (1.0 - alpha) * R[3 * p]
            R[3 * p + 1] = alpha * cg + (1.0 - alpha) * R[3 * p + 1]
            R[3 * p + 2] = alpha * cb + (1.0 - alpha) * R[3 * p + 2]
        slots[k, 0] = s0; slots[k, 1] = s1; slots[k, 2] = s2
        slots[k, 3] = s3; slots[k, 4] = s4; slots[k, 5] = s5
        slots[k, 6] = s6; slots[k, 7] = s7; slots[k, 8] = s8
        slots[k, 9] = s9; slots[k, 10] = s10; slots[k, 11] = s11


def backward_tiles(mean2d, conic, skew2d, opair, color, inst_prim, ranges,
                   tiles_x, width, height, background, final_T, last_idx,
                   dL_dpix):
    cdef double[:, ::1] mean2d_v = np.ascontiguousarray(mean2d, dtype=np.float64)
    cdef double[:, ::1] conic_v = np.ascontiguousarray(conic, dtype=np.float64)
    cdef double[:, ::1] skew2d_v = np.ascontiguousarray(skew2d, dtype=np.float64)
    cdef double[:, ::1] opair_v = np.ascontiguousarray(opair, dtype=np.float64)
    cdef double[:, ::1] color_v = np.ascontiguousarray(color, dtype=np.float64)
    cdef cnp.int64_t[::1] prim_v = np.ascontiguousarray(inst_prim, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ranges_v = np.ascontiguousarray(ranges, dtype=np.int64)
    cdef double[:, ::1] final_T_v = np.ascontiguousarray(final_T, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] li_v = np.ascontiguousarray(last_idx, dtype=np.int64)
    cdef double[:, :, ::1] dL_v = np.ascontiguousarray(dL_dpix, dtype=np.float64)

    bg = np.asarray(background, dtype=np.float64).reshape(3)
    slots_arr = np.zeros((prim_v.shape[0], 12))
    cdef double[:, ::1] slots_v = slots_arr
    cdef double bg0 = bg[0], bg1 = bg[1], bg2 = bg[2]
    cdef int ntx = tiles_x, w = width, h = height
    cdef int n_tiles = ranges_v.shape[0]
    cdef int tid

    with nogil:
        for tid in prange(n_tiles, schedule="dynamic"):
            _backward_tile(tid, mean2d_v, conic_v, skew2d_v, opair_v, color_v,
                           prim_v, ranges_v, ntx, w, h, bg0, bg1, bg2,
                           final_T_v, li_v, dL_v, slots_v)

    return slots_arr
