"""Camera conventions and intrinsics.

Two pose conventions are supported: OpenGL-style right-up-back (camera looks
down its -z axis) and OpenCV-style right-down-forward (+z looks into the
scene).  The renderer works in OpenCV coordinates; OpenGL poses are converted
by right-multiplying the axis-alignment involution diag(1,-1,-1,1).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

OPENGL = "opengl"
OPENCV = "opencv"

T_ALIGN = np.diag([1.0, -1.0, -1.0, 1.0])


@dataclasses.dataclass
class CameraView:
    c2w: np.ndarray
    convention: str
    width: int
    height: int
    fov_x: float
    fov_y: float | None = None
    near: float = 0.01
    far: float = 1e6

    def __post_init__(self):
        self.c2w = np.asarray(self.c2w, dtype=np.float64).reshape(4, 4)
        if self.convention not in (OPENGL, OPENCV):
            raise ValueError(f"unknown convention: {self.convention!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if not 0.0 < self.fov_x < math.pi:
            raise ValueError("fov must lie in (0, pi)")
        if self.fov_y is None:
            # matching tan ratio keeps square pixels at any aspect
            self.fov_y = 2.0 * math.atan(math.tan(self.fov_x / 2.0) * self.height / self.width)
        if not 0.0 < self.fov_y < math.pi:
            raise ValueError("fov must lie in (0, pi)")
        if not np.allclose(self.c2w[3], [0, 0, 0, 1], atol=1e-6):
            raise ValueError("c2w bottom row must be (0,0,0,1)")
        R = self.c2w[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise ValueError("c2w rotation block is not orthonormal")


def to_opencv(view: CameraView) -> CameraView:
    """Convert a pose to OpenCV convention; identity if already there."""
    if view.convention == OPENCV:
        return view
    return dataclasses.replace(view, c2w=view.c2w @ T_ALIGN, convention=OPENCV)


def intrinsics(view: CameraView) -> np.ndarray:
    fx = view.width / (2.0 * math.tan(view.fov_x / 2.0))
    fy = view.height / (2.0 * math.tan(view.fov_y / 2.0))
    return np.array([
        [fx, 0.0, view.width / 2.0],
        [0.0, fy, view.height / 2.0],
        [0.0, 0.0, 1.0],
    ])


def world_to_cam(view: CameraView) -> tuple[np.ndarray, np.ndarray]:
    """Rotation and translation mapping world points to camera space."""
    R_cw = view.c2w[:3, :3]
    eye = view.c2w[:3, 3]
    R = R_cw.T
    return R, -R @ eye


def look_at(eye, target, up=(0.0, 1.0, 0.0), convention: str = OPENCV) -> np.ndarray:
    """Camera-to-world matrix for a camera at `eye` looking at `target`."""
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z = z / np.linalg.norm(z)
    x = np.cross(z, np.asarray(up, dtype=np.float64))
    n = np.linalg.norm(x)
    if n < 1e-12:  # looking along up: pick any perpendicular
        x = np.cross(z, [1.0, 0.0, 0.0])
        n = np.linalg.norm(x)
    x = x / n
    y = np.cross(z, x)
    c2w = np.eye(4)
    c2w[:3, 0], c2w[:3, 1], c2w[:3, 2], c2w[:3, 3] = x, y, z, eye
    if convention == OPENGL:
        c2w = c2w @ T_ALIGN
    return c2w
