"""
Periodic finite-difference stencils, the discrete Hessian and its adjoint.

Neighbours are gathered through wrap_index, so every stencil below is the
case-by-case definition with the periodic wrap folded in. ``x`` runs
along columns (axis 1) and ``y`` along rows (axis 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ScalarField, check_same_shape, wrap_index


def _at(u: ScalarField, di: int, dj: int) -> ScalarField:
    """Field whose (i, j) sample is u(i + di, j + dj) with periodic wrap."""
    m, n = u.shape
    rows = wrap_index(np.arange(m) + di, m)
    cols = wrap_index(np.arange(n) + dj, n)
    return u[np.ix_(rows, cols)]


def dxx(u: ScalarField) -> ScalarField:
    return _at(u, 0, -1) - 2.0 * u + _at(u, 0, 1)


def dyy(u: ScalarField) -> ScalarField:
    return _at(u, -1, 0) - 2.0 * u + _at(u, 1, 0)


def dxy_forward(u: ScalarField) -> ScalarField:
    return u - _at(u, 1, 0) - _at(u, 0, 1) + _at(u, 1, 1)


def dxy_backward(u: ScalarField) -> ScalarField:
    return u - _at(u, -1, 0) - _at(u, 0, -1) + _at(u, -1, -1)


def gradient_central(u: ScalarField) -> tuple[ScalarField, ScalarField]:
    ux = 0.5 * (_at(u, 0, 1) - _at(u, 0, -1))
    uy = 0.5 * (_at(u, 1, 0) - _at(u, -1, 0))
    return ux, uy


@dataclass(frozen=True)
class MatrixField:
    """
    Per-pixel 2x2 matrix stored as four planes.

    p1 = (1,1), p2 = (2,1), p3 = (1,2), p4 = (2,2).
    """

    p1: ScalarField
    p2: ScalarField
    p3: ScalarField
    p4: ScalarField

    def __post_init__(self):
        check_same_shape(self.p1, self.p2, self.p3, self.p4)

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> "MatrixField":
        return cls(*(np.zeros(shape) for _ in range(4)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.p1.shape

    def planes(self) -> tuple[ScalarField, ScalarField, ScalarField, ScalarField]:
        return self.p1, self.p2, self.p3, self.p4

    def __add__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField(*(a + b for a, b in zip(self.planes(), other.planes())))

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return MatrixField(*(a - b for a, b in zip(self.planes(), other.planes())))

    def __mul__(self, factor) -> "MatrixField":
        # scalar or per-pixel ScalarField
        return MatrixField(*(a * factor for a in self.planes()))

    __rmul__ = __mul__

    def magnitude(self) -> ScalarField:
        """Per-pixel Frobenius norm."""
        return np.sqrt(self.p1**2 + self.p2**2 + self.p3**2 + self.p4**2)

    def inner(self, other: "MatrixField") -> float:
        return float(sum(np.sum(a * b) for a, b in zip(self.planes(), other.planes())))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))


def hessian(u: ScalarField) -> MatrixField:
    mixed = dxy_forward(u)
    return MatrixField(dxx(u), mixed, mixed.copy(), dyy(u))


def div2(p: MatrixField) -> ScalarField:
    """Second-order divergence; the adjoint of ``hessian`` under the pixel-sum inner product."""
    return dxx(p.p1) + dxy_backward(p.p2) + dxy_backward(p.p3) + dyy(p.p4)
