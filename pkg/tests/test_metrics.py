"""Metric tests: closed forms and an independent windowed SSIM oracle."""

import math

import numpy as np
import pytest

from rnan.errors import ConfigurationError
from rnan.metrics import psnr, rgb_to_y, score_pair, ssim
from rnan.synthetic import make_image

from conftest import seeded


class TestPsnr:
    def test_identical_images_hit_sentinel(self, rng):
        x = rng.random((1, 1, 8, 8))
        assert psnr(x, x) == math.inf

    def test_unit_difference_closed_form(self):
        a = np.full((1, 1, 10, 10), 100 / 255)
        b = np.full((1, 1, 10, 10), 101 / 255)
        assert abs(psnr(a, b) - 20 * math.log10(255)) < 1e-9

    def test_symmetry(self, rng):
        a, b = rng.random((1, 3, 6, 6)), rng.random((1, 3, 6, 6))
        assert psnr(a, b) == psnr(b, a)

    def test_monotone_in_noise_level(self):
        img = make_image(8, size=64, channels=1)
        from rnan.degrade import add_awgn

        values = [psnr(add_awgn(img, s, 1), img) for s in (5, 15, 30, 60)]
        assert values == sorted(values, reverse=True)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            psnr(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 4, 5)))


def ssim_reference(a, b):
    """Per-window double loop with the standard 11x11 Gaussian."""
    ax = np.arange(11) - 5.0
    g = np.exp(-(ax * ax) / (2 * 1.5 * 1.5))
    win = np.outer(g, g)
    win /= win.sum()
    x = np.rint(a * 255.0)
    y = np.rint(b * 255.0)
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    vals = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px, py = x[i : i + 11, j : j + 11], y[i : i + 11, j : j + 11]
            mx, my = np.sum(win * px), np.sum(win * py)
            vx = np.sum(win * px * px) - mx * mx
            vy = np.sum(win * py * py) - my * my
            cxy = np.sum(win * px * py) - mx * my
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


class TestSsim:
    def test_self_similarity_is_one(self):
        x = make_image(4, size=32, channels=1)
        assert abs(ssim(x, x) - 1.0) < 1e-9

    def test_inverted_patch_negative(self):
        x = make_image(21, size=32, channels=1)
        assert ssim(x, 1.0 - x) < 0.0

    def test_symmetry(self):
        a = make_image(5, size=24, channels=1)
        b = make_image(6, size=24, channels=1)
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12

    def test_matches_window_oracle(self):
        rng = seeded(70)
        a = rng.random((20, 23))
        b = np.clip(a + rng.standard_normal((20, 23)) * 0.1, 0, 1)
        assert abs(ssim(a, b) - ssim_reference(a, b)) < 1e-10

    def test_bounded_on_random_pairs(self):
        for seed in range(5):
            rng = seeded(71, seed)
            a, b = rng.random((16, 16)), rng.random((16, 16))
            assert -1.0 <= ssim(a, b) <= 1.0 + 1e-12

    def test_small_image_rejected(self):
        with pytest.raises(ConfigurationError):
            ssim(np.zeros((10, 10)), np.zeros((10, 10)))

    def test_colour_input_rejected(self):
        with pytest.raises(ConfigurationError):
            ssim(np.zeros((1, 3, 16, 16)), np.zeros((1, 3, 16, 16)))


class TestLuma:
    def test_white_point(self):
        y = rgb_to_y(np.ones((1, 3, 2, 2)))
        np.testing.assert_allclose(y, 235 / 255, atol=1e-12)

    def test_black_point(self):
        y = rgb_to_y(np.zeros((1, 3, 2, 2)))
        np.testing.assert_allclose(y, 16 / 255, atol=1e-12)

    def test_mid_gray(self):
        y = rgb_to_y(np.full((1, 3, 2, 2), 0.5))
        np.testing.assert_allclose(y, 125.5 / 255, atol=1e-12)

    def test_wrong_channel_count(self):
        with pytest.raises(ConfigurationError):
            rgb_to_y(np.zeros((1, 1, 4, 4)))


class TestScorePair:
    def test_y_channel_changes_scoring_plane_only(self):
        a = make_image(31, size=32, channels=3)
        b = make_image(32, size=32, channels=3)
        rgb = score_pair(a, b, y_channel=False)
        luma = score_pair(a, b, y_channel=True)
        assert rgb.psnr_db != luma.psnr_db  # different plane, different value
        assert luma.ssim == rgb.ssim  # SSIM is on the luminance plane either way

    def test_metrics_deterministic(self):
        a = make_image(33, size=24, channels=1)
        b = make_image(34, size=24, channels=1)
        assert score_pair(a, b) == score_pair(a, b)
