"""Camera JSON codec, PNG round-trips, dataset split, synthetic generator."""

import json
import os

import numpy as np
import pytest

from skewsplat.camera import OPENCV, OPENGL, CameraView, look_at
from skewsplat.dataset import (CAMERAS_FILENAME, Dataset, camera_entry,
                               load_dataset, load_image, load_trajectory,
                               parse_camera_entry, save_image, save_trajectory)
from skewsplat.raster.forward import render_forward
from skewsplat.synthetic import blob_scene, generate_blob_dataset, orbit_views


def some_view(width=48, height=32):
    c2w = look_at((3.0, 1.0, -2.0), (0.0, 0.0, 0.0))
    return CameraView(c2w, OPENCV, width, height, 0.8)


class TestImageIO:
    def test_roundtrip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, (20, 30, 3))
        path = tmp_path / "img.png"
        save_image(path, img)
        back = load_image(path)
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12

    def test_quantized_values_roundtrip_exactly(self, tmp_path):
        img = np.arange(24).reshape(2, 4, 3) / 255.0
        path = tmp_path / "img.png"
        save_image(path, img)
        np.testing.assert_array_equal(load_image(path), img)

    def test_out_of_range_clipped(self, tmp_path):
        img = np.full((4, 4, 3), 1.7)
        path = tmp_path / "img.png"
        save_image(path, img)
        assert np.all(load_image(path) == 1.0)

    def test_wrong_rank_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(tmp_path / "img.png", np.zeros((4, 4)))


class TestCameraCodec:
    def test_entry_roundtrip(self):
        view = some_view()
        obj = json.loads(json.dumps(camera_entry(view, "images/0.png")))
        back, file = parse_camera_entry(obj, 0, need_file=True)
        assert file == "images/0.png"
        np.testing.assert_array_equal(back.c2w, view.c2w)
        assert (back.convention, back.width, back.height, back.fov_x) == \
               (view.convention, view.width, view.height, view.fov_x)

    def test_missing_field_names_entry(self):
        obj = camera_entry(some_view())
        del obj["c2w"]
        with pytest.raises(ValueError, match="camera entry 3.*c2w"):
            parse_camera_entry(obj, 3, need_file=False)

    def test_short_matrix_rejected(self):
        obj = camera_entry(some_view())
        obj["c2w"] = obj["c2w"][:12]
        with pytest.raises(ValueError, match="16 numbers"):
            parse_camera_entry(obj, 0, need_file=False)

    def test_unknown_convention_rejected(self):
        obj = camera_entry(some_view())
        obj["convention"] = "blender"
        with pytest.raises(ValueError, match="convention"):
            parse_camera_entry(obj, 0, need_file=False)

    def test_invalid_pose_error_carries_index(self):
        obj = camera_entry(some_view())
        obj["c2w"][0] = 5.0
        with pytest.raises(ValueError, match="camera entry 7"):
            parse_camera_entry(obj, 7, need_file=False)

    def test_missing_file_only_when_required(self):
        obj = camera_entry(some_view())
        parse_camera_entry(obj, 0, need_file=False)
        with pytest.raises(ValueError, match="file"):
            parse_camera_entry(obj, 0, need_file=True)


class TestTrajectoryIO:
    def test_roundtrip(self, tmp_path):
        views = orbit_views(5, width=32, height=24)
        path = tmp_path / "traj.json"
        save_trajectory(path, views)
        back = load_trajectory(path)
        assert len(back) == 5
        for a, b in zip(views, back):
            np.testing.assert_array_equal(a.c2w, b.c2w)
            assert a.fov_x == b.fov_x

    def test_document_is_a_json_array(self, tmp_path):
        path = tmp_path / "traj.json"
        save_trajectory(path, orbit_views(2))
        with open(path) as f:
            assert isinstance(json.load(f), list)

    def test_non_array_document_rejected(self, tmp_path):
        path = tmp_path / "traj.json"
        path.write_text('{"cameras": []}')
        with pytest.raises(ValueError, match="array"):
            load_trajectory(path)


class TestDatasetSplit:
    def make(self, n):
        img = np.zeros((8, 8, 3))
        return Dataset([(img, some_view(8, 8)) for _ in range(n)])

    def test_every_eighth_goes_to_test(self):
        assert self.make(8).test_indices == [0]
        assert self.make(16).test_indices == [0, 8]
        assert self.make(17).test_indices == [0, 8, 16]

    def test_split_sizes_and_disjointness(self):
        ds = self.make(20)
        assert len(ds.train) + len(ds.test) == 20
        assert len(ds.test) == 3

    def test_single_image_dataset_rejected(self):
        with pytest.raises(ValueError, match="training"):
            self.make(1)


class TestLoadDataset:
    def test_missing_cameras_file(self, tmp_path):
        with pytest.raises(ValueError, match=CAMERAS_FILENAME):
            load_dataset(tmp_path)

    def test_empty_camera_list(self, tmp_path):
        (tmp_path / CAMERAS_FILENAME).write_text("[]")
        with pytest.raises(ValueError, match="empty"):
            load_dataset(tmp_path)

    def test_missing_image_file_names_entry(self, tmp_path):
        entry = camera_entry(some_view(), "images/nope.png")
        (tmp_path / CAMERAS_FILENAME).write_text(json.dumps([entry]))
        with pytest.raises(ValueError, match="camera entry 0.*not found"):
            load_dataset(tmp_path)

    def test_dimension_mismatch_names_entry(self, tmp_path):
        save_image(tmp_path / "img.png", np.zeros((16, 16, 3)))
        entry = camera_entry(some_view(48, 32), "img.png")
        (tmp_path / CAMERAS_FILENAME).write_text(json.dumps([entry]))
        with pytest.raises(ValueError, match="camera entry 0.*declares"):
            load_dataset(tmp_path)


class TestSynthetic:
    def test_generator_writes_loadable_dataset(self, tmp_path):
        ds = generate_blob_dataset(tmp_path, n_views=8)
        assert len(os.listdir(tmp_path / "images")) == 8
        loaded = load_dataset(tmp_path)
        assert len(loaded.train) == 7 and len(loaded.test) == 1
        # loaded pixels differ from the render only by PNG quantization
        direct = ds.images[3][0]
        assert np.abs(loaded.images[3][0] - direct).max() <= 0.5 / 255 + 1e-12

    def test_orbit_views_look_at_origin(self):
        for view in orbit_views(6, radius=3.0, elevation=1.0):
            eye = view.c2w[:3, 3]
            fwd = view.c2w[:3, 2]  # opencv: +z into the scene
            expected = -eye / np.linalg.norm(eye)
            np.testing.assert_allclose(fwd, expected, atol=1e-12)

    def test_blob_scene_is_three_valid_primitives(self):
        scene = blob_scene()
        assert len(scene) == 3
        for i in range(3):
            scene.primitive(i).validate()
        img = render_forward(scene, orbit_views(4)[0]).color
        assert img.max() > 0.5  # blobs actually visible
