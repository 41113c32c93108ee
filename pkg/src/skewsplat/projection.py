"""Projection of 3D skew-Gaussian primitives to screen splats, with gradients.

Forward: camera transform, perspective-Jacobian covariance projection with
isotropic screen dilation and its brightness compensation, skewness-vector
projection via the closure of skew-normal laws under affine maps, and SH
color evaluation.

Backward: the exact reverse chain, vectorized over primitives.  All screen
quantities (pixel mean, conic, 2D skewness, opacity pair, color) receive
gradients from the blending kernels and are chained here to the primitive
parameters (position, log scales, quaternion, SH, opacity logits, skewness,
boundary direction), plus the two densification statistics: the image-plane
positional gradient norm and the camera-depth gradient magnitude.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import sh as shlib
from .camera import CameraView, intrinsics, to_opencv, world_to_cam
from .kernel_math import BETA_CLAMP, Conic, Skew2D, sigmoid
from .scene import Scene, SkewGaussian, covariance3d_batch, quat_to_rotmat


@dataclasses.dataclass
class ScreenSplat:
    mean2d: np.ndarray          # (2,) pixel coordinates
    conic: Conic                # inverse of the dilated 2D covariance
    skew2d: Skew2D              # projected screen skewness
    depth: float                # camera-space z
    opacity_pair: tuple         # sigmoid(logits) * dilation compensation
    dilation_comp: float
    color: np.ndarray           # (3,) RGB after SH eval, offset, floor clamp
    radius: float               # 3 sigma of the dilated screen covariance


@dataclasses.dataclass
class Projected:
    """Vectorized projection results plus every cache the backward pass reuses."""

    valid: np.ndarray           # (N,) bool
    mean2d: np.ndarray          # (N,2) px
    depth: np.ndarray           # (N,)
    conic: np.ndarray           # (N,3) a,b,c
    skew2d: np.ndarray          # (N,2)
    opacity_pair: np.ndarray    # (N,2)
    color: np.ndarray           # (N,3)
    radius: np.ndarray          # (N,)
    comp: np.ndarray            # (N,)
    # caches for the backward chain
    t: np.ndarray               # (N,3) camera-space positions
    J: np.ndarray               # (N,2,3)
    Tmat: np.ndarray            # (N,2,3) J @ R_w2c
    sigma_world: np.ndarray     # (N,3,3)
    cov_raw: np.ndarray         # (N,2,2) undilated screen covariance
    inv_raw: np.ndarray         # (N,2,2) its inverse (0 where fallback)
    inv_dil: np.ndarray         # (N,2,2) conic as a matrix
    det_raw: np.ndarray         # (N,)
    eta: np.ndarray             # (N,3) beta + dir
    skew_u: np.ndarray          # (N,2)
    skew_v: np.ndarray          # (N,2)
    skew_r: np.ndarray          # (N,)
    skew_fallback: np.ndarray   # (N,) bool
    skew_clip: np.ndarray       # (N,2) bool, |skew2d| hit its bound
    frustum_gate: np.ndarray    # (N,2) 1.0 where tx/tz (ty/tz) unclamped
    color_live: np.ndarray      # (N,3) bool, color above the zero floor
    sigmas: np.ndarray          # (N,2) sigmoid of the two logits
    dirs: np.ndarray            # (N,3) unit view directions for SH
    dir_norm: np.ndarray        # (N,)
    R_w2c: np.ndarray           # (3,3)
    cam_pos: np.ndarray         # (3,)
    fx: float
    fy: float
    s: float
    n_skew_fallback: int


def project_skewness(g: SkewGaussian, T: np.ndarray, Sigma: np.ndarray,
                     Sigma_p: np.ndarray) -> Skew2D:
    """Screen-space skewness of one primitive.

    The combined vector eta = beta + dir drives both the density asymmetry
    and the opacity boundary, so one projected 2-vector serves the whole
    screen kernel.  A non-positive radicand (possible only through round-off,
    the exact value is >= 1) falls back to zero skew.
    """
    eta = g.beta + g.dir
    skew, _, _ = _project_eta(eta[None], T[None], Sigma[None], Sigma_p[None])
    skew = np.clip(skew[0], -BETA_CLAMP, BETA_CLAMP)
    return Skew2D(float(skew[0]), float(skew[1]))


def _project_eta(eta, Tmat, Sigma, Sigma_p):
    """Batched skewness projection.

    Returns (skew2d (N,2) pre-clamp, cache dict, fallback (N,) bool).
    """
    n = eta.shape[0]
    w = np.einsum("nij,nj->ni", Sigma, eta)            # Sigma @ eta
    u = np.einsum("nij,nj->ni", Tmat, w)               # T Sigma eta
    p = np.einsum("ni,ni->n", eta, w)                  # eta' Sigma eta
    det = Sigma_p[:, 0, 0] * Sigma_p[:, 1, 1] - Sigma_p[:, 0, 1] * Sigma_p[:, 1, 0]
    ok = det > 1e-300
    inv = np.zeros_like(Sigma_p)
    d = np.where(ok, det, 1.0)
    inv[:, 0, 0] = Sigma_p[:, 1, 1] / d
    inv[:, 1, 1] = Sigma_p[:, 0, 0] / d
    inv[:, 0, 1] = -Sigma_p[:, 0, 1] / d
    inv[:, 1, 0] = -Sigma_p[:, 1, 0] / d
    inv[~ok] = 0.0
    v = np.einsum("nij,nj->ni", inv, u)
    q = p - np.einsum("ni,ni->n", u, v)
    radicand = 1.0 + q
    fallback = (~ok) | (radicand <= 0.0)
    r = np.sqrt(np.where(fallback, 1.0, radicand))
    skew = v / r[:, None]
    skew[fallback] = 0.0
    cache = {"w": w, "u": u, "v": v, "r": r, "inv": inv}
    return skew, cache, fallback


def _project_eta_vjp(g_skew, eta, Sigma, Tmat, cache, fallback):
    """Reverse-mode of _project_eta.

    Returns gradients for Sigma_p (the undilated screen covariance), T,
    Sigma, and eta.  Zero where the forward fell back to zero skew.
    """
    u, v, r, M = cache["u"], cache["v"], cache["r"], cache["inv"]
    g = np.where(fallback[:, None], 0.0, g_skew)
    r3 = r ** 3
    s_q = -np.einsum("ni,ni->n", g, v) / (2.0 * r3)    # dL/dq
    g_v = g / r[:, None]                               # dL/dv (direct)
    # v = M u and q = p - u' M u
    g_M = np.einsum("ni,nj->nij", g_v, u) - s_q[:, None, None] * np.einsum("ni,nj->nij", u, u)
    g_u = np.einsum("nij,nj->ni", M, g_v) - 2.0 * s_q[:, None] * v
    # M = inv(Sigma_p)
    g_Sp = -np.einsum("nij,njk,nkl->nil", M, g_M, M)
    # u = T w,  w = Sigma eta,  p = eta' Sigma eta
    w = cache["w"]
    g_T = np.einsum("ni,nj->nij", g_u, w)
    g_w = np.einsum("nji,nj->ni", Tmat, g_u)
    g_Sigma = np.einsum("ni,nj->nij", g_w, eta) + s_q[:, None, None] * np.einsum("ni,nj->nij", eta, eta)
    g_eta = np.einsum("nji,nj->ni", Sigma, g_w) + 2.0 * s_q[:, None] * w
    return g_Sp, g_T, g_Sigma, g_eta


def project_scene(scene: Scene, view: CameraView, s: float = 0.3) -> Projected:
    view = to_opencv(view)
    n = len(scene)
    R_w2c, t_vec = world_to_cam(view)
    cam_pos = view.c2w[:3, 3].copy()
    K = intrinsics(view)
    fx, fy = K[0, 0], K[1, 1]
    cx, cy = K[0, 2], K[1, 2]

    t = scene.mu @ R_w2c.T + t_vec
    depth = t[:, 2].copy()
    valid = depth > view.near
    tz = np.where(valid, depth, 1.0)

    tan_fovx = math.tan(view.fov_x / 2.0)
    tan_fovy = math.tan(view.fov_y / 2.0)
    limx, limy = 1.3 * tan_fovx, 1.3 * tan_fovy
    txz = t[:, 0] / tz
    tyz = t[:, 1] / tz
    gate = np.ones((n, 2))
    gate[:, 0] = (np.abs(txz) <= limx).astype(np.float64)
    gate[:, 1] = (np.abs(tyz) <= limy).astype(np.float64)
    tx_c = np.clip(txz, -limx, limx) * tz
    ty_c = np.clip(tyz, -limy, limy) * tz

    J = np.zeros((n, 2, 3))
    J[:, 0, 0] = fx / tz
    J[:, 0, 2] = -fx * tx_c / tz ** 2
    J[:, 1, 1] = fy / tz
    J[:, 1, 2] = -fy * ty_c / tz ** 2
    Tmat = J @ R_w2c

    sigma_world = covariance3d_batch(scene.log_scale, scene.rot)
    cov_raw = np.einsum("nij,njk,nlk->nil", Tmat, sigma_world, Tmat)
    cov_dil = cov_raw.copy()
    cov_dil[:, 0, 0] += s
    cov_dil[:, 1, 1] += s

    det_raw = cov_raw[:, 0, 0] * cov_raw[:, 1, 1] - cov_raw[:, 0, 1] * cov_raw[:, 1, 0]
    det_dil = cov_dil[:, 0, 0] * cov_dil[:, 1, 1] - cov_dil[:, 0, 1] * cov_dil[:, 1, 0]
    valid &= det_dil > 1e-300
    dd = np.where(det_dil > 1e-300, det_dil, 1.0)

    inv_dil = np.empty_like(cov_dil)
    inv_dil[:, 0, 0] = cov_dil[:, 1, 1] / dd
    inv_dil[:, 1, 1] = cov_dil[:, 0, 0] / dd
    inv_dil[:, 0, 1] = -cov_dil[:, 0, 1] / dd
    inv_dil[:, 1, 0] = -cov_dil[:, 1, 0] / dd
    conic = np.stack([inv_dil[:, 0, 0], inv_dil[:, 0, 1], inv_dil[:, 1, 1]], axis=1)

    comp = np.sqrt(np.clip(det_raw, 0.0, None) / dd)

    mid = 0.5 * (cov_dil[:, 0, 0] + cov_dil[:, 1, 1])
    lam_max = mid + np.sqrt(np.clip(mid * mid - det_dil, 0.0, None))
    radius = 3.0 * np.sqrt(np.clip(lam_max, 0.0, None))

    mean2d = np.stack([fx * txz + cx, fy * tyz + cy], axis=1)

    sigmas = sigmoid(scene.opacity_logits)
    opacity_pair = sigmas * comp[:, None]

    eta = scene.beta + scene.dir
    skew_pre, skew_cache, skew_fallback = _project_eta(eta, Tmat, sigma_world, cov_raw)
    skew_clip = np.abs(skew_pre) > BETA_CLAMP
    skew2d = np.clip(skew_pre, -BETA_CLAMP, BETA_CLAMP)

    dvec = scene.mu - cam_pos[None, :]
    dn = np.linalg.norm(dvec, axis=1)
    dn_safe = np.where(dn > 1e-12, dn, 1.0)
    dirs = dvec / dn_safe[:, None]
    color = shlib.eval_sh(scene.sh_degree, scene.sh, dirs) + 0.5
    color_live = color > 0.0
    color = np.clip(color, 0.0, None)

    return Projected(
        valid=valid, mean2d=mean2d, depth=depth, conic=conic, skew2d=skew2d,
        opacity_pair=opacity_pair, color=color, radius=radius, comp=comp,
        t=t, J=J, Tmat=Tmat, sigma_world=sigma_world, cov_raw=cov_raw,
        inv_raw=skew_cache["inv"], inv_dil=inv_dil, det_raw=det_raw,
        eta=eta, skew_u=skew_cache["u"], skew_v=skew_cache["v"],
        skew_r=skew_cache["r"], skew_fallback=skew_fallback, skew_clip=skew_clip,
        frustum_gate=gate, color_live=color_live, sigmas=sigmas,
        dirs=dirs, dir_norm=dn_safe, R_w2c=R_w2c, cam_pos=cam_pos,
        fx=fx, fy=fy, s=s, n_skew_fallback=int(skew_fallback.sum()),
    )


def project_splat(g: SkewGaussian, view: CameraView, s: float = 0.3) -> ScreenSplat | None:
    scene = Scene.from_primitives([g])
    p = project_scene(scene, view, s)
    if not p.valid[0]:
        return None
    view = to_opencv(view)
    r = float(p.radius[0])
    mx, my = p.mean2d[0]
    if mx < -r or mx > view.width + r or my < -r or my > view.height + r:
        return None
    return ScreenSplat(
        mean2d=p.mean2d[0], conic=Conic(*p.conic[0]), skew2d=Skew2D(*p.skew2d[0]),
        depth=float(p.depth[0]), opacity_pair=tuple(p.opacity_pair[0]),
        dilation_comp=float(p.comp[0]), color=p.color[0], radius=r,
    )


def projection_backward(proj: Projected, scene: Scene, view: CameraView,
                        d_mean2d: np.ndarray, d_conic: np.ndarray,
                        d_skew2d: np.ndarray, d_opair: np.ndarray,
                        d_color: np.ndarray) -> dict:
    """Chain screen-space gradients back to primitive parameters.

    `d_mean2d` is in pixel units.  Returns a dict of per-primitive gradient
    arrays plus the densification statistics g_uv (image-plane gradient norm,
    NDC units) and g_z (|dL/d depth|).
    """
    view = to_opencv(view)
    n = len(scene)
    fx, fy, s = proj.fx, proj.fy, proj.s
    t = proj.t
    tz = np.where(proj.valid, proj.depth, 1.0)
    live = proj.valid[:, None]

    d_mean2d = np.where(live, d_mean2d, 0.0)
    d_conic = np.where(live, d_conic, 0.0)
    d_skew2d = np.where(live, d_skew2d, 0.0)
    d_opair = np.where(live, d_opair, 0.0)
    d_color = np.where(live, d_color, 0.0)

    # opacity pair: o_i = sigmoid(l_i) * comp
    sig = proj.sigmas
    d_logits = d_opair * proj.comp[:, None] * sig * (1.0 - sig)
    d_comp = np.einsum("ni,ni->n", d_opair, sig)

    # conic = inv(cov_dil): dL/dcov_dil = -C G C with the off-diagonal split
    Gc = np.empty((n, 2, 2))
    Gc[:, 0, 0] = d_conic[:, 0]
    Gc[:, 0, 1] = Gc[:, 1, 0] = 0.5 * d_conic[:, 1]
    Gc[:, 1, 1] = d_conic[:, 2]
    C = proj.inv_dil
    G_dil = -np.einsum("nij,njk,nkl->nil", C, Gc, C)

    # comp = sqrt(det_raw / det_dil)
    comp_ok = (proj.det_raw > 0.0) & proj.valid
    half_comp = np.where(comp_ok, 0.5 * proj.comp * d_comp, 0.0)
    G_raw = half_comp[:, None, None] * proj.inv_raw
    G_dil -= half_comp[:, None, None] * proj.inv_dil

    # skewness projection VJP (gradient gated where the output was clamped)
    g_skew = np.where(proj.skew_clip, 0.0, d_skew2d)
    cache = {"u": proj.skew_u, "v": proj.skew_v, "r": proj.skew_r,
             "inv": proj.inv_raw, "w": np.einsum("nij,nj->ni", proj.sigma_world, proj.eta)}
    g_Sp, g_T_skew, g_Sigma_skew, g_eta = _project_eta_vjp(
        g_skew, proj.eta, proj.sigma_world, proj.Tmat, cache, proj.skew_fallback)
    G_raw += g_Sp

    # cov_dil = cov_raw + s*I
    G_raw += G_dil

    # cov_raw = T Sigma_w T'
    Tm = proj.Tmat
    G_sym = G_raw + np.transpose(G_raw, (0, 2, 1))
    G_T = np.einsum("nij,njk,nkl->nil", G_sym, Tm, proj.sigma_world) + g_T_skew
    G_Sigma = np.einsum("nji,njk,nkl->nil", Tm, G_raw, Tm) + g_Sigma_skew

    # T = J @ R_w2c
    G_J = np.einsum("nij,kj->nik", G_T, proj.R_w2c)

    # Sigma_w = (R S)(R S)'
    M = quat_to_rotmat(scene.rot) * np.exp(scene.log_scale)[:, None, :]
    G_M = np.einsum("nij,njk->nik", G_Sigma + np.transpose(G_Sigma, (0, 2, 1)), M)
    R = quat_to_rotmat(scene.rot)
    G_S = np.einsum("nji,njk->nik", R, G_M)  # R' G_M; diagonal is the scale grad
    d_log_scale = np.stack([G_S[:, 0, 0], G_S[:, 1, 1], G_S[:, 2, 2]], axis=1) \
        * np.exp(scene.log_scale)
    G_R = G_M * np.exp(scene.log_scale)[:, None, :]  # G_M @ S', S diagonal
    d_rot = _quat_backward(scene.rot, G_R)

    # J entries -> camera-space position
    d_t = np.zeros((n, 3))
    gate = proj.frustum_gate
    tz2 = tz ** 2
    tz3 = tz ** 3
    d_t[:, 0] += gate[:, 0] * (-fx / tz2) * G_J[:, 0, 2]
    d_t[:, 1] += gate[:, 1] * (-fy / tz2) * G_J[:, 1, 2]
    # the z row: d(fx/tz)/dtz and d(-fx*tx_c/tz^2)/dtz; when the ratio is
    # clamped tx_c is proportional to tz, which halves the exponent term
    tx_c = -proj.J[:, 0, 2] * tz2 / fx
    ty_c = -proj.J[:, 1, 2] * tz2 / fy
    kx = np.where(gate[:, 0] > 0, 2.0, 1.0)
    ky = np.where(gate[:, 1] > 0, 2.0, 1.0)
    d_t[:, 2] += (-fx / tz2) * G_J[:, 0, 0] + (-fy / tz2) * G_J[:, 1, 1]
    d_t[:, 2] += kx * fx * tx_c / tz3 * G_J[:, 0, 2]
    d_t[:, 2] += ky * fy * ty_c / tz3 * G_J[:, 1, 2]

    # pixel mean = (fx*tx/tz + cx, fy*ty/tz + cy), unclamped ratio
    d_t[:, 0] += d_mean2d[:, 0] * fx / tz
    d_t[:, 1] += d_mean2d[:, 1] * fy / tz
    d_t[:, 2] += -d_mean2d[:, 0] * fx * t[:, 0] / tz2 - d_mean2d[:, 1] * fy * t[:, 1] / tz2

    g_z = np.abs(np.where(proj.valid, d_t[:, 2], 0.0))
    g_uv = np.linalg.norm(
        d_mean2d * np.array([view.width / 2.0, view.height / 2.0])[None, :], axis=1)

    d_mu = d_t @ proj.R_w2c

    # SH: color = clamp(basis . sh + 0.5); gradient flows where unclamped
    dc = np.where(proj.color_live, d_color, 0.0)
    basis = shlib.sh_basis(scene.sh_degree, proj.dirs)
    d_sh = basis[:, :, None] * dc[:, None, :]
    if scene.sh_degree > 0:
        bg = shlib.sh_basis_grad(scene.sh_degree, proj.dirs)
        d_dirn = np.einsum("nkc,nkd->nd", scene.sh * dc[:, None, :], bg)
        proj_perp = d_dirn - proj.dirs * np.einsum("ni,ni->n", proj.dirs, d_dirn)[:, None]
        d_mu += proj_perp / proj.dir_norm[:, None]

    d_beta = g_eta.copy()
    d_dir = g_eta.copy()

    zero_invalid = lambda a: np.where(proj.valid.reshape((n,) + (1,) * (a.ndim - 1)), a, 0.0)
    return {
        "d_mu": zero_invalid(d_mu),
        "d_log_scale": zero_invalid(d_log_scale),
        "d_rot": zero_invalid(d_rot),
        "d_sh": zero_invalid(d_sh),
        "d_opacity_logits": zero_invalid(d_logits),
        "d_beta": zero_invalid(d_beta),
        "d_dir": zero_invalid(d_dir),
        "g_uv": np.where(proj.valid, g_uv, 0.0),
        "g_z": g_z,
    }


def _quat_backward(quat: np.ndarray, G_R: np.ndarray) -> np.ndarray:
    """Gradient through rotation-matrix construction and quat normalization."""
    n = quat.shape[0]
    norm = np.linalg.norm(quat, axis=1, keepdims=True)
    q = quat / norm
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]

    zero = np.zeros(n)
    dR_dw = 2.0 * np.stack([
        np.stack([zero, -z, y], axis=1),
        np.stack([z, zero, -x], axis=1),
        np.stack([-y, x, zero], axis=1),
    ], axis=1)
    dR_dx = 2.0 * np.stack([
        np.stack([zero, y, z], axis=1),
        np.stack([y, -2 * x, -w], axis=1),
        np.stack([z, w, -2 * x], axis=1),
    ], axis=1)
    dR_dy = 2.0 * np.stack([
        np.stack([-2 * y, x, w], axis=1),
        np.stack([x, zero, z], axis=1),
        np.stack([-w, z, -2 * y], axis=1),
    ], axis=1)
    dR_dz = 2.0 * np.stack([
        np.stack([-2 * z, -w, x], axis=1),
        np.stack([w, -2 * z, y], axis=1),
        np.stack([x, y, zero], axis=1),
    ], axis=1)

    d_qhat = np.stack([
        np.einsum("nij,nij->n", G_R, dR_dw),
        np.einsum("nij,nij->n", G_R, dR_dx),
        np.einsum("nij,nij->n", G_R, dR_dy),
        np.einsum("nij,nij->n", G_R, dR_dz),
    ], axis=1)

    # qhat = q / |q|: J = (I - qhat qhat') / |q|
    inner = np.einsum("ni,ni->n", q, d_qhat)
    return (d_qhat - q * inner[:, None]) / norm
