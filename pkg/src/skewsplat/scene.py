"""Primitive storage and binary PLY serialization.

A scene is a structure-of-arrays over skew-Gaussian primitives.  Each
primitive carries position, an anisotropic covariance factored as
rotation x scale, SH color coefficients, a pair of base-opacity logits,
a world-space skewness vector and an opacity boundary direction.

The PLY layout extends the common splat vertex schema with the fields
skew_0..2, dir_0..2, opacity2, so files from plain-Gaussian pipelines load
with those fields defaulted (zero skew, mirrored opacity) and degenerate to
symmetric kernels exactly.
"""

from __future__ import annotations

import dataclasses
import io
import math

import numpy as np


class PlyError(ValueError):
    """Base class for PLY parsing failures."""


class PlyFormatError(PlyError):
    """Header is not a little-endian binary PLY of the expected shape."""


class PlyMissingFieldError(PlyError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing mandatory vertex property: {field}")


class PlyTruncatedError(PlyError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"truncated payload: expected {expected} bytes, got {got}")


@dataclasses.dataclass
class SkewGaussian:
    mu: np.ndarray            # (3,) world position
    log_scale: np.ndarray     # (3,) log axis scales
    rot: np.ndarray           # (4,) unit quaternion (w, x, y, z)
    sh: np.ndarray            # (K, 3) SH coefficients, K = (degree+1)^2
    opacity_logits: np.ndarray  # (2,) pre-sigmoid base opacities
    beta: np.ndarray          # (3,) world-space skewness vector
    dir: np.ndarray           # (3,) opacity boundary direction

    def __post_init__(self):
        for name in ("mu", "log_scale", "rot", "sh", "opacity_logits", "beta", "dir"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    def validate(self):
        assert self.mu.shape == (3,) and self.log_scale.shape == (3,)
        assert self.rot.shape == (4,) and self.opacity_logits.shape == (2,)
        assert self.beta.shape == (3,) and self.dir.shape == (3,)
        assert self.sh.ndim == 2 and self.sh.shape[1] == 3
        for name in ("mu", "log_scale", "rot", "sh", "opacity_logits", "beta", "dir"):
            assert np.all(np.isfinite(getattr(self, name))), name
        assert abs(np.linalg.norm(self.rot) - 1.0) < 1e-6


def quat_to_rotmat(q):
    """Unit quaternion(s) (w,x,y,z) to rotation matrix/matrices."""
    q = np.asarray(q, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    R = np.empty((q.shape[0], 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return R[0] if single else R


def covariance3d(g: SkewGaussian) -> np.ndarray:
    """World covariance R * S * S^T * R^T; symmetric positive definite."""
    R = quat_to_rotmat(g.rot)
    M = R * np.exp(g.log_scale)[None, :]
    return M @ M.T


def covariance3d_batch(log_scale: np.ndarray, rot: np.ndarray) -> np.ndarray:
    R = quat_to_rotmat(rot)
    M = R * np.exp(log_scale)[:, None, :]
    return M @ np.transpose(M, (0, 2, 1))


class Scene:
    """Growable primitive set plus background color and SH degree."""

    ARRAY_FIELDS = ("mu", "log_scale", "rot", "sh", "opacity_logits", "beta", "dir")

    def __init__(self, mu, log_scale, rot, sh, opacity_logits, beta, dir,
                 background=(0.0, 0.0, 0.0), sh_degree: int | None = None):
        self.mu = np.asarray(mu, dtype=np.float64).reshape(-1, 3)
        n = self.mu.shape[0]
        self.log_scale = np.asarray(log_scale, dtype=np.float64).reshape(n, 3)
        self.rot = np.asarray(rot, dtype=np.float64).reshape(n, 4)
        sh = np.asarray(sh, dtype=np.float64)
        self.sh = sh if sh.ndim == 3 else sh.reshape(n, -1, 3)
        self.opacity_logits = np.asarray(opacity_logits, dtype=np.float64).reshape(n, 2)
        self.beta = np.asarray(beta, dtype=np.float64).reshape(n, 3)
        self.dir = np.asarray(dir, dtype=np.float64).reshape(n, 3)
        self.background = np.asarray(background, dtype=np.float64).reshape(3)
        if sh_degree is None:
            sh_degree = int(round(math.sqrt(self.sh.shape[1]))) - 1
        if (sh_degree + 1) ** 2 != self.sh.shape[1] or not 0 <= sh_degree <= 3:
            raise ValueError(f"sh coefficient count {self.sh.shape[1]} does not "
                             f"match degree {sh_degree}")
        self.sh_degree = sh_degree

    # -- construction --------------------------------------------------

    @classmethod
    def empty(cls, sh_degree: int = 0, background=(0.0, 0.0, 0.0)) -> "Scene":
        k = (sh_degree + 1) ** 2
        z = np.zeros((0, 3))
        return cls(z, z, np.zeros((0, 4)), np.zeros((0, k, 3)), np.zeros((0, 2)),
                   z, z, background=background, sh_degree=sh_degree)

    @classmethod
    def from_primitives(cls, prims: list[SkewGaussian],
                        background=(0.0, 0.0, 0.0), sh_degree: int | None = None) -> "Scene":
        if not prims:
            return cls.empty(0 if sh_degree is None else sh_degree, background)
        return cls(
            np.stack([p.mu for p in prims]),
            np.stack([p.log_scale for p in prims]),
            np.stack([p.rot for p in prims]),
            np.stack([p.sh for p in prims]),
            np.stack([p.opacity_logits for p in prims]),
            np.stack([p.beta for p in prims]),
            np.stack([p.dir for p in prims]),
            background=background, sh_degree=sh_degree,
        )

    def __len__(self) -> int:
        return self.mu.shape[0]

    def primitive(self, i: int) -> SkewGaussian:
        return SkewGaussian(self.mu[i], self.log_scale[i], self.rot[i], self.sh[i],
                            self.opacity_logits[i], self.beta[i], self.dir[i])

    def add(self, g: SkewGaussian):
        if g.sh.shape[0] != self.sh.shape[1]:
            raise ValueError("sh degree mismatch")
        for name in self.ARRAY_FIELDS:
            cur = getattr(self, name)
            setattr(self, name, np.concatenate([cur, getattr(g, name)[None]], axis=0))

    def copy(self) -> "Scene":
        return Scene(*(getattr(self, f).copy() for f in self.ARRAY_FIELDS),
                     background=self.background.copy(), sh_degree=self.sh_degree)

    # -- serialization --------------------------------------------------

    def _vertex_fields(self):
        n_rest = (self.sh.shape[1] - 1) * 3
        names = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
        names += [f"f_rest_{i}" for i in range(n_rest)]
        names += ["opacity", "opacity2", "scale_0", "scale_1", "scale_2",
                  "rot_0", "rot_1", "rot_2", "rot_3",
                  "skew_0", "skew_1", "skew_2", "dir_0", "dir_1", "dir_2"]
        return names

    def save_ply(self, path):
        n = len(self)
        names = self._vertex_fields()
        rest = self.sh[:, 1:, :]  # (N, M, 3)
        m = rest.shape[1]
        cols = [self.mu[:, 0], self.mu[:, 1], self.mu[:, 2],
                self.sh[:, 0, 0], self.sh[:, 0, 1], self.sh[:, 0, 2]]
        # rest coefficients are channel-major: all R, then G, then B
        for ch in range(3):
            for j in range(m):
                cols.append(rest[:, j, ch])
        cols += [self.opacity_logits[:, 0], self.opacity_logits[:, 1],
                 self.log_scale[:, 0], self.log_scale[:, 1], self.log_scale[:, 2],
                 self.rot[:, 0], self.rot[:, 1], self.rot[:, 2], self.rot[:, 3],
                 self.beta[:, 0], self.beta[:, 1], self.beta[:, 2],
                 self.dir[:, 0], self.dir[:, 1], self.dir[:, 2]]
        data = np.empty(n, dtype=[(nm, "<f8") for nm in names])
        for nm, col in zip(names, cols):
            data[nm] = col
        bg = " ".join("%.17g" % v for v in self.background)
        header = io.StringIO()
        header.write("ply\nformat binary_little_endian 1.0\n")
        header.write(f"comment background {bg}\n")
        header.write(f"comment sh_degree {self.sh_degree}\n")
        header.write(f"element vertex {n}\n")
        for nm in names:
            header.write(f"property double {nm}\n")
        header.write("end_header\n")
        with open(path, "wb") as f:
            f.write(header.getvalue().encode("ascii"))
            f.write(data.tobytes())


_PLY_TYPES = {
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
    "char": "<i1", "int8": "<i1", "uchar": "<u1", "uint8": "<u1",
    "short": "<i2", "int16": "<i2", "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4", "uint": "<u4", "uint32": "<u4",
}

_MANDATORY = ("x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
              "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3")


def load_ply(path) -> Scene:
    with open(path, "rb") as f:
        raw = f.read()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply\n") or end < 0:
        raise PlyFormatError("not a PLY file (missing ply/end_header)")
    header_lines = raw[:end].decode("ascii", errors="replace").splitlines()
    payload = raw[end + len(b"end_header\n"):]

    fmt = next((ln for ln in header_lines if ln.startswith("format ")), None)
    if fmt is None:
        raise PlyFormatError("missing format line")
    if "binary_little_endian" not in fmt:
        raise PlyFormatError(f"unsupported format: {fmt.split()[1]}")

    background = np.zeros(3)
    sh_degree_hint = None
    for ln in header_lines:
        if ln.startswith("comment background "):
            background = np.array([float(v) for v in ln.split()[2:5]])
        elif ln.startswith("comment sh_degree "):
            sh_degree_hint = int(ln.split()[2])

    n_vertex = None
    props: list[tuple[str, str]] = []
    in_vertex = False
    for ln in header_lines:
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                n_vertex = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            if parts[1] == "list":
                raise PlyFormatError("list properties are not supported on vertices")
            if parts[1] not in _PLY_TYPES:
                raise PlyFormatError(f"unsupported property type: {parts[1]}")
            props.append((parts[2], _PLY_TYPES[parts[1]]))
    if n_vertex is None:
        raise PlyFormatError("missing 'element vertex' declaration")

    names = [p[0] for p in props]
    for field in _MANDATORY:
        if field not in names:
            raise PlyMissingFieldError(field)

    dtype = np.dtype([(nm, tp) for nm, tp in props])
    need = n_vertex * dtype.itemsize
    if len(payload) < need:
        raise PlyTruncatedError(need, len(payload))
    data = np.frombuffer(payload[:need], dtype=dtype)

    def col(nm):
        return np.ascontiguousarray(data[nm]).astype(np.float64)

    n_rest = sum(1 for nm in names if nm.startswith("f_rest_"))
    if n_rest % 3 != 0:
        raise PlyFormatError(f"f_rest_* count {n_rest} is not a multiple of 3")
    m = n_rest // 3
    degree = int(round(math.sqrt(m + 1))) - 1
    if (degree + 1) ** 2 - 1 != m or degree > 3:
        raise PlyFormatError(f"f_rest_* count {n_rest} does not match any SH degree <= 3")
    if sh_degree_hint is not None and sh_degree_hint != degree:
        raise PlyFormatError(f"header sh_degree {sh_degree_hint} contradicts "
                             f"f_rest_* count {n_rest}")

    k = (degree + 1) ** 2
    sh = np.zeros((n_vertex, k, 3))
    sh[:, 0, 0] = col("f_dc_0")
    sh[:, 0, 1] = col("f_dc_1")
    sh[:, 0, 2] = col("f_dc_2")
    for ch in range(3):
        for j in range(m):
            sh[:, 1 + j, ch] = col(f"f_rest_{ch * m + j}")

    op1 = col("opacity")
    op2 = col("opacity2") if "opacity2" in names else op1.copy()
    get3 = lambda stem: (np.stack([col(f"{stem}_{i}") for i in range(3)], axis=1)
                         if f"{stem}_0" in names else np.zeros((n_vertex, 3)))
    return Scene(
        np.stack([col("x"), col("y"), col("z")], axis=1),
        np.stack([col(f"scale_{i}") for i in range(3)], axis=1),
        np.stack([col(f"rot_{i}") for i in range(4)], axis=1),
        sh,
        np.stack([op1, op2], axis=1),
        get3("skew"),
        get3("dir"),
        background=background,
        sh_degree=degree,
    )
