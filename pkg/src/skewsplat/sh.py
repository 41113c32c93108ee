"""Real spherical harmonics for view-dependent color, degrees 0-3.

Color convention: channel = clamp(sum_k basis_k(dir) * sh_k + 0.5, min=0).
The 0.5 offset and the clamp live in the caller (the projector), which also
needs the clamp mask to gate gradients.
"""

from __future__ import annotations

import numpy as np

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
         -1.0925484305920792, 0.5462742152960396)
SH_C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
         0.3731763325901154, -0.4570457994644658, 1.445305721320277,
         -0.5900435899266435)


def n_coeffs(degree: int) -> int:
    return (degree + 1) ** 2


def sh_basis(degree: int, dirs: np.ndarray) -> np.ndarray:
    """Basis values, shape (N, (degree+1)^2); dirs are unit vectors (N, 3)."""
    n = dirs.shape[0]
    out = np.empty((n, n_coeffs(degree)))
    out[:, 0] = SH_C0
    if degree < 1:
        return out
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    out[:, 1] = -SH_C1 * y
    out[:, 2] = SH_C1 * z
    out[:, 3] = -SH_C1 * x
    if degree < 2:
        return out
    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    out[:, 4] = SH_C2[0] * xy
    out[:, 5] = SH_C2[1] * yz
    out[:, 6] = SH_C2[2] * (2.0 * zz - xx - yy)
    out[:, 7] = SH_C2[3] * xz
    out[:, 8] = SH_C2[4] * (xx - yy)
    if degree < 3:
        return out
    out[:, 9] = SH_C3[0] * y * (3.0 * xx - yy)
    out[:, 10] = SH_C3[1] * xy * z
    out[:, 11] = SH_C3[2] * y * (4.0 * zz - xx - yy)
    out[:, 12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    out[:, 13] = SH_C3[4] * x * (4.0 * zz - xx - yy)
    out[:, 14] = SH_C3[5] * z * (xx - yy)
    out[:, 15] = SH_C3[6] * x * (xx - 3.0 * yy)
    return out


def sh_basis_grad(degree: int, dirs: np.ndarray) -> np.ndarray:
    """d(basis)/d(dir) before the unit-normalization chain; (N, K, 3)."""
    n = dirs.shape[0]
    g = np.zeros((n, n_coeffs(degree), 3))
    if degree < 1:
        return g
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    g[:, 1, 1] = -SH_C1
    g[:, 2, 2] = SH_C1
    g[:, 3, 0] = -SH_C1
    if degree < 2:
        return g
    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    g[:, 4, 0] = SH_C2[0] * y
    g[:, 4, 1] = SH_C2[0] * x
    g[:, 5, 1] = SH_C2[1] * z
    g[:, 5, 2] = SH_C2[1] * y
    g[:, 6, 0] = SH_C2[2] * (-2.0 * x)
    g[:, 6, 1] = SH_C2[2] * (-2.0 * y)
    g[:, 6, 2] = SH_C2[2] * (4.0 * z)
    g[:, 7, 0] = SH_C2[3] * z
    g[:, 7, 2] = SH_C2[3] * x
    g[:, 8, 0] = SH_C2[4] * (2.0 * x)
    g[:, 8, 1] = SH_C2[4] * (-2.0 * y)
    if degree < 3:
        return g
    g[:, 9, 0] = SH_C3[0] * 6.0 * xy
    g[:, 9, 1] = SH_C3[0] * (3.0 * xx - 3.0 * yy)
    g[:, 10, 0] = SH_C3[1] * yz
    g[:, 10, 1] = SH_C3[1] * xz
    g[:, 10, 2] = SH_C3[1] * xy
    g[:, 11, 0] = SH_C3[2] * (-2.0 * xy)
    g[:, 11, 1] = SH_C3[2] * (4.0 * zz - xx - 3.0 * yy)
    g[:, 11, 2] = SH_C3[2] * (8.0 * yz)
    g[:, 12, 0] = SH_C3[3] * (-6.0 * xz)
    g[:, 12, 1] = SH_C3[3] * (-6.0 * yz)
    g[:, 12, 2] = SH_C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)
    g[:, 13, 0] = SH_C3[4] * (4.0 * zz - 3.0 * xx - yy)
    g[:, 13, 1] = SH_C3[4] * (-2.0 * xy)
    g[:, 13, 2] = SH_C3[4] * (8.0 * xz)
    g[:, 14, 0] = SH_C3[5] * (2.0 * xz)
    g[:, 14, 1] = SH_C3[5] * (-2.0 * yz)
    g[:, 14, 2] = SH_C3[5] * (xx - yy)
    g[:, 15, 0] = SH_C3[6] * (3.0 * xx - 3.0 * yy)
    g[:, 15, 1] = SH_C3[6] * (-6.0 * xy)
    return g


def eval_sh(degree: int, sh: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Raw SH sum per channel (no offset, no clamp); sh is (N, K, 3)."""
    basis = sh_basis(degree, dirs)
    return np.einsum("nk,nkc->nc", basis, sh[:, : basis.shape[1], :])
