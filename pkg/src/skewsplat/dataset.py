"""Dataset and trajectory files: camera JSON codec plus PNG image I/O.

One JSON document describes a camera list.  Each entry carries
{c2w (row-major 16 reals), convention, fov_x, width, height} and, for
datasets, the image path relative to the JSON file.  A trajectory is the
same document without image paths, so one codec serves both.  Images are
8-bit PNG on disk and linear [0, 1] float arrays in memory; no gamma
handling is applied in either direction.
"""

from __future__ import annotations

import dataclasses
import json
import numbers
import os

import numpy as np
from PIL import Image

from .camera import OPENCV, OPENGL, CameraView

CAMERAS_FILENAME = "cameras.json"
TEST_EVERY = 8


def load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float64) / 255.0


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Quantize a [0,1] float image to uint8; every output path shares this."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("image must be (H, W, 3)")
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(path, img: np.ndarray):
    Image.fromarray(quantize_u8(img), mode="RGB").save(path, format="PNG")


def _entry_error(index: int, msg: str) -> ValueError:
    return ValueError(f"camera entry {index}: {msg}")


def parse_camera_entry(obj, index: int, need_file: bool):
    """One JSON object to (CameraView, file-or-None); errors name the entry."""
    if not isinstance(obj, dict):
        raise _entry_error(index, "expected an object")
    for key in ("c2w", "convention", "fov_x", "width", "height"):
        if key not in obj:
            raise _entry_error(index, f"missing field {key!r}")
    c2w = obj["c2w"]
    if (not isinstance(c2w, list) or len(c2w) != 16
            or not all(isinstance(v, numbers.Real) for v in c2w)):
        raise _entry_error(index, "c2w must be a flat list of 16 numbers")
    if obj["convention"] not in (OPENCV, OPENGL):
        raise _entry_error(index, f"unknown convention {obj['convention']!r}")
    file = obj.get("file")
    if need_file and not isinstance(file, str):
        raise _entry_error(index, "missing image file path")
    try:
        view = CameraView(
            c2w=np.asarray(c2w, dtype=np.float64).reshape(4, 4),
            convention=obj["convention"],
            width=int(obj["width"]),
            height=int(obj["height"]),
            fov_x=float(obj["fov_x"]),
        )
    except (TypeError, ValueError) as e:
        raise _entry_error(index, str(e)) from e
    return view, file


def camera_entry(view: CameraView, file: str | None = None) -> dict:
    entry = {
        "c2w": [float(v) for v in view.c2w.reshape(-1)],
        "convention": view.convention,
        "fov_x": float(view.fov_x),
        "width": int(view.width),
        "height": int(view.height),
    }
    if file is not None:
        entry["file"] = file
    return entry


def _load_entries(path, need_file: bool):
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, list):
        raise ValueError(f"{path}: camera document must be a JSON array")
    return [parse_camera_entry(obj, i, need_file) for i, obj in enumerate(doc)]


def load_trajectory(path) -> list[CameraView]:
    return [view for view, _ in _load_entries(path, need_file=False)]


def save_trajectory(path, views: list[CameraView]):
    doc = [camera_entry(v) for v in views]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)


def save_cameras(path, views: list[CameraView], files: list[str]):
    doc = [camera_entry(v, f) for v, f in zip(views, files, strict=True)]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)


@dataclasses.dataclass
class Dataset:
    """Images with cameras, split every TEST_EVERY-th image into the test set."""

    images: list[tuple[np.ndarray, CameraView]]

    def __post_init__(self):
        if len(self.train) < 1:
            raise ValueError("dataset must keep at least one training image")

    @property
    def test_indices(self) -> list[int]:
        return list(range(0, len(self.images), TEST_EVERY))

    @property
    def train(self) -> list[tuple[np.ndarray, CameraView]]:
        skip = set(self.test_indices)
        return [pair for i, pair in enumerate(self.images) if i not in skip]

    @property
    def test(self) -> list[tuple[np.ndarray, CameraView]]:
        return [self.images[i] for i in self.test_indices]


def load_dataset(root) -> Dataset:
    """Read root/cameras.json and every referenced image."""
    cam_path = os.path.join(root, CAMERAS_FILENAME)
    if not os.path.isfile(cam_path):
        raise ValueError(f"no {CAMERAS_FILENAME} in {root}")
    entries = _load_entries(cam_path, need_file=True)
    if not entries:
        raise ValueError(f"{cam_path}: camera list is empty")
    images = []
    for i, (view, file) in enumerate(entries):
        img_path = os.path.join(root, file)
        if not os.path.isfile(img_path):
            raise _entry_error(i, f"image file not found: {file}")
        img = load_image(img_path)
        if img.shape[:2] != (view.height, view.width):
            raise _entry_error(
                i, f"image is {img.shape[1]}x{img.shape[0]} but the camera "
                   f"declares {view.width}x{view.height}")
        images.append((img, view))
    return Dataset(images)
