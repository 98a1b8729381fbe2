"""
Structure-tensor analysis and diffusion-tensor assembly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ParameterError
from .diffops import MatrixField, gradient_central
from .grid import ScalarField

log = logging.getLogger(__name__)

TENSOR_MODES = ("edge", "coherence")
EDGE_CONSTANT = 3.31488
EDGE_EXPONENT = 8
DEGENERATE_GAP = 1e-12
EDGE_CONTRAST = 0.05
COHERENCE_CONTRAST_SCALE = 1e-4


@dataclass(frozen=True)
class TensorParams:
    sigma: float = 1.0
    rho: float = 2.0
    contrast: float | None = None
    gamma: float = 0.01
    mode: str = "edge"

    def __post_init__(self):
        if self.sigma < 0 or self.rho < 0:
            raise ParameterError(f"sigma and rho must be >= 0 (got {self.sigma}, {self.rho})")
        if self.contrast is not None and not self.contrast > 0:
            raise ParameterError(f"contrast must be > 0 (got {self.contrast})")
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1) (got {self.gamma})")
        if self.mode not in TENSOR_MODES:
            raise ParameterError(f"tensor mode must be one of {TENSOR_MODES} (got {self.mode!r})")

    def resolve_contrast(self, u: ScalarField) -> float:
        """Explicit contrast, else the per-mode default (coherence scales with the dynamic range)."""
        if self.contrast is not None:
            return self.contrast
        if self.mode == "edge":
            return EDGE_CONTRAST
        span = float(np.max(u) - np.min(u))
        return COHERENCE_CONTRAST_SCALE * max(span, 1.0 / 255.0) ** 2


@dataclass(frozen=True)
class StructureTensorField:
    j11: ScalarField
    j12: ScalarField
    j22: ScalarField


@dataclass(frozen=True)
class EigenField:
    mu1: ScalarField
    mu2: ScalarField
    v1: np.ndarray  # M x N x 2, (x, y) components
    v2: np.ndarray
    coh: ScalarField


@dataclass(frozen=True)
class DiffusionTensorField:
    t11: ScalarField
    t12: ScalarField
    t22: ScalarField

    @classmethod
    def identity(cls, shape: tuple[int, int]) -> "DiffusionTensorField":
        return cls(np.ones(shape), np.zeros(shape), np.ones(shape))

    def apply(self, v: MatrixField) -> MatrixField:
        """Pixelwise matrix product T V."""
        t11, t12, t22 = self.t11, self.t12, self.t22
        return MatrixField(
            t11 * v.p1 + t12 * v.p2,
            t12 * v.p1 + t22 * v.p2,
            t11 * v.p3 + t12 * v.p4,
            t12 * v.p3 + t22 * v.p4,
        )

    def as_structure(self) -> StructureTensorField:
        return StructureTensorField(self.t11, self.t12, self.t22)

    def deviation_from_identity(self) -> float:
        return float(max(np.max(np.abs(self.t11 - 1.0)), np.max(np.abs(self.t12)), np.max(np.abs(self.t22 - 1.0))))


def gaussian_smooth(u: ScalarField, std: float) -> ScalarField:
    if std < 0:
        raise ParameterError(f"std must be >= 0 (got {std})")
    if std == 0:
        return u.copy()
    return gaussian_filter(u, std, mode="nearest", radius=math.ceil(3.0 * std))


def _smoothed_gradient(u: ScalarField, sigma: float) -> tuple[ScalarField, ScalarField]:
    return gradient_central(gaussian_smooth(u, sigma))


def structure_tensor(u: ScalarField, params: TensorParams) -> StructureTensorField:
    ux, uy = _smoothed_gradient(u, params.sigma)
    return _average_outer_products(ux, uy, params.rho)


def _average_outer_products(ux: ScalarField, uy: ScalarField, rho: float) -> StructureTensorField:
    return StructureTensorField(
        gaussian_smooth(ux * ux, rho),
        gaussian_smooth(ux * uy, rho),
        gaussian_smooth(uy * uy, rho),
    )


def eigen_decompose(j: StructureTensorField) -> EigenField:
    j11, j12, j22 = j.j11, j.j12, j.j22
    coh = (j11 - j22) ** 2 + 4.0 * j12**2
    root = np.sqrt(coh)
    trace = j11 + j22
    mu1 = 0.5 * (trace + root)
    mu2 = 0.5 * (trace - root)

    # two proportional closed forms for the leading eigenvector; keep the better conditioned one
    a = np.stack([j12, mu1 - j11], axis=-1)
    b = np.stack([mu1 - j22, j12], axis=-1)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    v1 = np.where((na >= nb)[..., None], a, b)
    norm = np.maximum(na, nb)

    degenerate = (mu1 - mu2) <= DEGENERATE_GAP
    safe = np.where(degenerate | (norm == 0), 1.0, norm)
    v1 = v1 / safe[..., None]
    v1[degenerate] = (1.0, 0.0)
    v2 = np.stack([-v1[..., 1], v1[..., 0]], axis=-1)
    return EigenField(mu1, mu2, v1, v2, coh)


def edge_eigenvalues(s: ScalarField, contrast: float) -> tuple[ScalarField, ScalarField]:
    if not contrast > 0:
        raise ParameterError(f"contrast must be > 0 (got {contrast})")
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        ratio = (s / contrast) ** EDGE_EXPONENT
        # -expm1 keeps lam1 strictly positive where 1 - exp would round to zero
        lam1 = np.where(s <= 0, 1.0, -np.expm1(-EDGE_CONSTANT / ratio))
    return lam1, np.ones_like(s)


def coherence_eigenvalues(
    mu1: ScalarField, mu2: ScalarField, coh: ScalarField, gamma: float, contrast: float
) -> tuple[ScalarField, ScalarField]:
    if not 0 < gamma < 1:
        raise ParameterError(f"gamma must lie in (0, 1) (got {gamma})")
    if not contrast > 0:
        raise ParameterError(f"contrast must be > 0 (got {contrast})")
    equal = np.abs(mu1 - mu2) <= DEGENERATE_GAP
    with np.errstate(divide="ignore", under="ignore"):
        lam2 = np.where(equal, gamma, gamma + (1.0 - gamma) * np.exp(-contrast / np.where(equal, 1.0, coh)))
    return np.full_like(mu1, gamma), lam2


def assemble_tensor(eigs: EigenField, lam1: ScalarField, lam2: ScalarField) -> DiffusionTensorField:
    v1x, v1y = eigs.v1[..., 0], eigs.v1[..., 1]
    v2x, v2y = eigs.v2[..., 0], eigs.v2[..., 1]
    return DiffusionTensorField(
        lam1 * v1x * v1x + lam2 * v2x * v2x,
        lam1 * v1x * v1y + lam2 * v2x * v2y,
        lam1 * v1y * v1y + lam2 * v2y * v2y,
    )


def build_diffusion_tensor(u: ScalarField, params: TensorParams) -> DiffusionTensorField:
    """Structure tensor of ``u`` with eigenvalues remapped by the edge or coherence law."""
    ux, uy = _smoothed_gradient(u, params.sigma)
    eigs = eigen_decompose(_average_outer_products(ux, uy, params.rho))
    contrast = params.resolve_contrast(u)
    if params.mode == "edge":
        lam1, lam2 = edge_eigenvalues(np.hypot(ux, uy), contrast)
    else:
        lam1, lam2 = coherence_eigenvalues(eigs.mu1, eigs.mu2, eigs.coh, params.gamma, contrast)
    log.debug("[tensor] %s mode, contrast=%.3g, min lam1=%.3g", params.mode, contrast, float(lam1.min()))
    return assemble_tensor(eigs, lam1, lam2)
