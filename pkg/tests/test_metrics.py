"""PSNR/SSIM comparison metrics."""

import numpy as np
import pytest

from skewsplat.metrics import PSNR_CAP, ImageMetrics, compare, psnr


def random_image(seed, shape=(32, 32, 3), lo=0.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, shape)


class TestPsnr:
    def test_identical_images_hit_cap(self):
        img = random_image(0)
        assert psnr(img, img) == PSNR_CAP

    def test_uniform_offset_is_twenty_db(self):
        img = random_image(1, lo=0.0, hi=0.9)
        assert psnr(img, img + 0.1) == 20.0

    def test_symmetric(self):
        a, b = random_image(2), random_image(3)
        assert psnr(a, b) == psnr(b, a)

    def test_near_identical_stays_capped(self):
        img = random_image(4)
        assert psnr(img, img + 1e-12) == PSNR_CAP

    def test_grayscale_accepted(self):
        a = random_image(5, shape=(24, 24))
        assert psnr(a, a * 0.5) > 0.0


class TestCompare:
    def test_identical_images(self):
        img = random_image(6)
        m = compare(img, img)
        assert m == ImageMetrics(psnr=PSNR_CAP, ssim=1.0)

    def test_ssim_symmetric(self):
        a, b = random_image(7), random_image(8)
        assert compare(a, b).ssim == compare(b, a).ssim

    def test_degraded_image_scores_lower(self):
        clean = random_image(9)
        noisy = np.clip(clean + random_image(10, lo=-0.2, hi=0.2), 0, 1)
        m_noisy = compare(clean, noisy)
        assert m_noisy.psnr < PSNR_CAP
        assert m_noisy.ssim < 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            compare(random_image(11), random_image(12, shape=(32, 31, 3)))

    def test_non_image_rank_rejected(self):
        v = np.zeros(16)
        with pytest.raises(ValueError):
            compare(v, v)
