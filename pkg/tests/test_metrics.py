import math

import numpy as np
import pytest

from src.errors import DimensionMismatchError
from src.modules import degrade, metrics


def test_psnr_identical_is_infinite(shapes64):
    assert metrics.psnr(shapes64, shapes64) == math.inf
    assert metrics.mse(shapes64, shapes64) == 0.0


@pytest.mark.parametrize("offset, expected", [(0.1, 20.0), (0.01, 40.0)])
def test_psnr_from_constant_error(offset, expected):
    ref = np.full((16, 16), 0.5)
    assert metrics.psnr(ref + offset, ref) == pytest.approx(expected, abs=1e-9)


def test_ssim_identity_and_symmetry(shapes64):
    assert metrics.ssim(shapes64, shapes64) == pytest.approx(1.0)
    noisy = degrade.add_gaussian_noise(shapes64, 0.01, seed=4)
    assert metrics.ssim(noisy, shapes64) == pytest.approx(metrics.ssim(shapes64, noisy), abs=1e-12)


def test_ssim_orders_similarity(shapes64, stripe64):
    binary, _ = stripe64
    assert metrics.ssim(1.0 - binary, binary) < 0.1
    slight = degrade.add_gaussian_noise(shapes64, 1e-6, seed=4)
    assert metrics.ssim(slight, shapes64) > 0.99


def test_psnr_falls_with_noise(shapes64):
    values = [metrics.psnr(degrade.add_gaussian_noise(shapes64, v, seed=8), shapes64) for v in (0.005, 0.01, 0.02)]
    assert values[0] > values[1] > values[2]


def test_ssim_needs_a_full_window():
    with pytest.raises(DimensionMismatchError):
        metrics.ssim(np.zeros((8, 32)), np.zeros((8, 32)))


def test_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        metrics.psnr(np.zeros((16, 16)), np.zeros((16, 17)))


def test_color_evaluate(shapes64):
    rgb = np.stack([shapes64, shapes64 * 0.5, 1 - shapes64], axis=-1)
    report = metrics.evaluate(rgb, rgb)
    assert report.psnr == math.inf
    assert report.ssim == pytest.approx(1.0)
    assert report.as_row() == {"psnr": math.inf, "ssim": report.ssim, "mse": 0.0}
