"""
PSNR and SSIM on [0, 1] images.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

from ..errors import DimensionMismatchError
from .grid import ScalarField

PEAK = 1.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    mse: float

    def as_row(self) -> dict[str, float]:
        return {"psnr": self.psnr, "ssim": self.ssim, "mse": self.mse}


def _check_pair(test: ScalarField, reference: ScalarField) -> None:
    if test.shape != reference.shape:
        raise DimensionMismatchError(f"test is {test.shape}, reference is {reference.shape}")


def mse(test: ScalarField, reference: ScalarField) -> float:
    _check_pair(test, reference)
    return float(np.mean((test - reference) ** 2))


def psnr(test: ScalarField, reference: ScalarField) -> float:
    error = mse(test, reference)
    if error == 0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / error)


def ssim(test: ScalarField, reference: ScalarField) -> float:
    """Mean SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03."""
    _check_pair(test, reference)
    if min(test.shape[:2]) < SSIM_WINDOW:
        raise DimensionMismatchError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {test.shape[:2]}")
    value = structural_similarity(
        test,
        reference,
        win_size=SSIM_WINDOW,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        data_range=PEAK,
        K1=0.01,
        K2=0.03,
        channel_axis=-1 if test.ndim == 3 else None,
    )
    return float(np.clip(value, -1.0, 1.0))


def evaluate(test: ScalarField, reference: ScalarField) -> MetricReport:
    return MetricReport(psnr=psnr(test, reference), ssim=ssim(test, reference), mse=mse(test, reference))
