"""
Closed-form Fourier solve of the u-subproblem under periodic boundaries.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DimensionMismatchError, ParameterError, RestorationError
from .diffops import MatrixField, div2
from .grid import ScalarField, check_same_shape

log = logging.getLogger(__name__)

IMAG_TOLERANCE = 1e-9


def bilaplacian_symbol(q, r, n: int, m: int):
    """Fourier multiplier of div2(hessian(.)) at column frequency q and row frequency r."""
    return 4.0 * (np.cos(2.0 * np.pi * q / n) + np.cos(2.0 * np.pi * r / m) - 2.0) ** 2


@dataclass(frozen=True)
class SpectralDenominator:
    values: np.ndarray
    theta1: float
    theta2: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@lru_cache(maxsize=32)
def spectral_denominator(shape: tuple[int, int], theta1: float, theta2: float) -> SpectralDenominator:
    if not (theta1 > 0 and theta2 > 0):
        raise ParameterError(f"theta1 and theta2 must be > 0 (got {theta1}, {theta2})")
    m, n = shape
    r, q = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    values = theta1 + theta2 * bilaplacian_symbol(q, r, n, m)
    values.setflags(write=False)
    log.debug("[spectral] built denominator for %sx%s theta1=%g theta2=%g", m, n, theta1, theta2)
    return SpectralDenominator(values, theta1, theta2)


def solve_u(
    u_tilde: ScalarField,
    s: ScalarField,
    v: MatrixField,
    d: MatrixField,
    theta1: float,
    theta2: float,
    denom: SpectralDenominator | None = None,
) -> ScalarField:
    """Solve (theta1 + theta2 div2 hessian) u = theta1 (u_tilde - s) + theta2 div2(V - d)."""
    check_same_shape(u_tilde, s, v.p1, d.p1)
    if denom is None:
        denom = spectral_denominator(u_tilde.shape, theta1, theta2)
    if denom.shape != u_tilde.shape:
        raise DimensionMismatchError(f"denominator is {denom.shape}, field is {u_tilde.shape}")
    if (denom.theta1, denom.theta2) != (theta1, theta2):
        raise ParameterError("denominator was built for different penalty weights")

    rhs = theta1 * (u_tilde - s) + theta2 * div2(v - d)
    solution = np.fft.ifft2(np.fft.fft2(rhs) / denom.values)
    residue = float(np.max(np.abs(solution.imag)))
    if residue > IMAG_TOLERANCE:
        raise RestorationError(f"spectral solve left an imaginary residue of {residue:.3g}")
    return solution.real
