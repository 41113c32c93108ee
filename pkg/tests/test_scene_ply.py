"""Scene construction, covariance assembly, and PLY round trips."""

import math

import numpy as np
import pytest

from skewsplat.scene import (
    PlyFormatError,
    PlyMissingFieldError,
    PlyTruncatedError,
    Scene,
    SkewGaussian,
    covariance3d,
    load_ply,
    quat_to_rotmat,
)


def random_scene(rng, n=10, sh_degree=1, background=None) -> Scene:
    k = (sh_degree + 1) ** 2
    rot = rng.normal(size=(n, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    if background is None:
        background = rng.uniform(0, 1, 3)
    return Scene(
        rng.normal(size=(n, 3)),
        rng.uniform(-2, 0, (n, 3)),
        rot,
        rng.normal(size=(n, k, 3)) * 0.3,
        rng.normal(size=(n, 2)),
        rng.normal(size=(n, 3)),
        rng.normal(size=(n, 3)),
        background=background,
        sh_degree=sh_degree,
    )


class TestCovariance3d:
    def test_identity(self):
        g = SkewGaussian(np.zeros(3), np.zeros(3), [1, 0, 0, 0],
                         np.zeros((1, 3)), np.zeros(2), np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(covariance3d(g), np.eye(3), atol=1e-15)

    def test_rotated_anisotropic(self):
        # 90 degrees about z maps the x-axis scale onto the y axis
        q = [math.cos(math.pi / 4), 0, 0, math.sin(math.pi / 4)]
        g = SkewGaussian(np.zeros(3), np.log([2.0, 1.0, 1.0]), q,
                         np.zeros((1, 3)), np.zeros(2), np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(covariance3d(g), np.diag([1.0, 4.0, 1.0]), atol=1e-12)

    def test_symmetric_positive_definite(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            g = SkewGaussian(np.zeros(3), rng.uniform(-3, 1, 3), q,
                             np.zeros((1, 3)), np.zeros(2), np.zeros(3), np.zeros(3))
            cov = covariance3d(g)
            np.testing.assert_allclose(cov, cov.T, atol=1e-14)
            assert np.all(np.linalg.eigvalsh(cov) > 0)

    def test_quaternion_sign_flip(self):
        rng = np.random.default_rng(1)
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        mk = lambda qq: SkewGaussian(np.zeros(3), [0.1, -0.4, 0.3], qq,
                                     np.zeros((1, 3)), np.zeros(2), np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(covariance3d(mk(q)), covariance3d(mk(-q)), atol=1e-14)

    def test_hand_multiplied_oracle(self):
        rng = np.random.default_rng(2)
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        ls = np.array([0.2, -0.5, 0.9])
        R = quat_to_rotmat(q)
        S = np.diag(np.exp(ls))
        want = R @ S @ S.T @ R.T
        g = SkewGaussian(np.zeros(3), ls, q, np.zeros((1, 3)),
                         np.zeros(2), np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(covariance3d(g), want, atol=1e-13)


class TestPlyRoundTrip:
    def test_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        scene = random_scene(rng, n=17, sh_degree=2)
        p = tmp_path / "scene.ply"
        scene.save_ply(p)
        back = load_ply(p)
        assert back.sh_degree == scene.sh_degree
        np.testing.assert_array_equal(back.background, scene.background)
        for f in Scene.ARRAY_FIELDS:
            np.testing.assert_array_equal(getattr(back, f), getattr(scene, f), err_msg=f)

    def test_empty_scene(self, tmp_path):
        scene = Scene.empty(sh_degree=1, background=(0.25, 0.5, 0.75))
        p = tmp_path / "empty.ply"
        scene.save_ply(p)
        back = load_ply(p)
        assert len(back) == 0
        assert back.sh_degree == 1
        np.testing.assert_array_equal(back.background, [0.25, 0.5, 0.75])


def write_standard_3dgs(path, n=5, degree=1, seed=4, dtype="<f4", drop=None,
                        truncate=0, fmt="binary_little_endian"):
    """Emit a plain-Gaussian splat PLY the way ecosystem exporters do."""
    rng = np.random.default_rng(seed)
    m = (degree + 1) ** 2 - 1
    names = (["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
             + [f"f_rest_{i}" for i in range(3 * m)]
             + ["opacity", "scale_0", "scale_1", "scale_2",
                "rot_0", "rot_1", "rot_2", "rot_3"])
    if drop:
        names = [nm for nm in names if nm != drop]
    data = np.zeros(n, dtype=[(nm, dtype) for nm in names])
    for nm in names:
        data[nm] = rng.normal(size=n).astype(dtype)
    tname = "float" if dtype == "<f4" else "double"
    lines = ["ply", f"format {fmt} 1.0", f"element vertex {n}"]
    lines += [f"property {tname} {nm}" for nm in names]
    lines.append("end_header")
    blob = ("\n".join(lines) + "\n").encode() + data.tobytes()
    if truncate:
        blob = blob[:-truncate]
    path.write_bytes(blob)
    return data


class TestStandard3dgsImport:
    def test_defaults(self, tmp_path):
        p = tmp_path / "plain.ply"
        data = write_standard_3dgs(p, n=6, degree=1)
        scene = load_ply(p)
        assert len(scene) == 6
        assert scene.sh_degree == 1
        np.testing.assert_array_equal(scene.beta, np.zeros((6, 3)))
        np.testing.assert_array_equal(scene.dir, np.zeros((6, 3)))
        np.testing.assert_array_equal(scene.opacity_logits[:, 0], scene.opacity_logits[:, 1])
        np.testing.assert_allclose(scene.mu[:, 0], data["x"].astype(np.float64))
        np.testing.assert_allclose(scene.sh[:, 0, 1], data["f_dc_1"].astype(np.float64))
        # channel-major rest layout: f_rest_[ch*m + j] -> sh[:, 1+j, ch]
        np.testing.assert_allclose(scene.sh[:, 1, 1], data["f_rest_3"].astype(np.float64))

    def test_degree3(self, tmp_path):
        p = tmp_path / "deg3.ply"
        write_standard_3dgs(p, n=2, degree=3)
        assert load_ply(p).sh_degree == 3

    def test_missing_field(self, tmp_path):
        p = tmp_path / "broken.ply"
        write_standard_3dgs(p, drop="opacity")
        with pytest.raises(PlyMissingFieldError, match="opacity"):
            load_ply(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "short.ply"
        write_standard_3dgs(p, truncate=7)
        with pytest.raises(PlyTruncatedError):
            load_ply(p)

    def test_ascii_rejected(self, tmp_path):
        p = tmp_path / "ascii.ply"
        write_standard_3dgs(p, fmt="ascii")
        with pytest.raises(PlyFormatError, match="ascii"):
            load_ply(p)

    def test_not_a_ply(self, tmp_path):
        p = tmp_path / "junk.ply"
        p.write_bytes(b"\x89PNG not a ply")
        with pytest.raises(PlyFormatError):
            load_ply(p)


class TestSceneContainer:
    def test_add_and_primitive(self):
        scene = Scene.empty(sh_degree=0)
        g = SkewGaussian([1, 2, 3], [0, 0, 0], [1, 0, 0, 0], np.ones((1, 3)),
                         [0.1, 0.2], [0.5, 0, 0], [0, 0.5, 0])
        scene.add(g)
        assert len(scene) == 1
        back = scene.primitive(0)
        np.testing.assert_array_equal(back.mu, [1, 2, 3])
        np.testing.assert_array_equal(back.beta, [0.5, 0, 0])

    def test_copy_is_deep(self):
        rng = np.random.default_rng(5)
        a = random_scene(rng, n=3)
        b = a.copy()
        b.mu[0, 0] = 99.0
        assert a.mu[0, 0] != 99.0
