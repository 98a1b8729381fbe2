"""
Seeded degradations and synthetic test images.

Every generator draws from a Philox (counter-based) bit generator so the
same seed gives the same output on every platform.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from .grid import MaskField, ScalarField

log = logging.getLogger(__name__)

GAP_KINDS = ("straight", "slanted", "zigzag", "wide")
BACKGROUND = 1.0
STRIPE = 0.0
MISSING_FILL = 0.5


def rng_for(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer (got {seed})")
    return np.random.Generator(np.random.Philox(seed))


def add_gaussian_noise(u: ScalarField, variance: float, seed: int) -> ScalarField:
    if variance < 0:
        raise ParameterError(f"variance must be >= 0 (got {variance})")
    if variance == 0:
        return u.copy()
    noise = rng_for(seed).normal(0.0, math.sqrt(variance), size=u.shape)
    return np.clip(u + noise, 0.0, 1.0)


def add_salt_pepper(u: ScalarField, density: float, seed: int) -> ScalarField:
    if not 0 <= density <= 1:
        raise ParameterError(f"density must lie in [0, 1] (got {density})")
    rng = rng_for(seed)
    hit = rng.random(u.shape) < density
    salt = rng.random(u.shape) < 0.5
    return np.where(hit, salt.astype(np.float64), u)


def make_random_mask(m: int, n: int, missing_fraction: float, seed: int) -> MaskField:
    """Exactly round(fraction * m * n) pixels missing, drawn without replacement."""
    if not 0 <= missing_fraction <= 1:
        raise ParameterError(f"missing fraction must lie in [0, 1] (got {missing_fraction})")
    count = int(round(missing_fraction * m * n))
    known = np.ones(m * n, dtype=bool)
    known[rng_for(seed).choice(m * n, size=count, replace=False)] = False
    return known.reshape(m, n)


def apply_mask(u: ScalarField, known: MaskField, fill: float = MISSING_FILL) -> ScalarField:
    """Observed image for inpainting: missing pixels overwritten with ``fill``."""
    if u.ndim == 3:
        return np.where(known[..., None], u, fill)
    return np.where(known, u, fill)


@dataclass(frozen=True)
class GapSpec:
    kind: str
    width: int | None = None

    @classmethod
    def parse(cls, text: str) -> "GapSpec":
        """``straight:8`` style; the width may be omitted for ``wide``."""
        kind, _, width = text.partition(":")
        kind = kind.strip().lower()
        if kind not in GAP_KINDS:
            raise ParameterError(f"gap kind must be one of {GAP_KINDS} (got {kind!r})")
        if not width:
            if kind != "wide":
                raise ParameterError(f"gap {kind!r} needs a width, e.g. {kind}:8")
            return cls(kind)
        try:
            value = int(width)
        except ValueError:
            raise ParameterError(f"gap width must be an integer (got {width!r})") from None
        if value < 1:
            raise ParameterError(f"gap width must be >= 1 (got {value})")
        return cls(kind, value)


def _gap_offsets(kind: str, m: int, width: int) -> np.ndarray:
    rows = np.arange(m)
    if kind == "slanted":
        return np.rint((rows - (m - 1) / 2) * 0.5).astype(int)
    if kind == "zigzag":
        period = max(m // 2, 2)
        phase = (rows % period) / period
        triangle = 1.0 - 4.0 * np.abs(phase - 0.5)
        return np.rint(triangle * max(width // 2, 1)).astype(int)
    return np.zeros(m, dtype=int)


def make_stripe_fixture(m: int, n: int, gap: GapSpec | str) -> tuple[ScalarField, MaskField]:
    """
    Black horizontal stripe on white, plus a mask cutting the stripe.

    The missing band is ``width`` pixels wide on every row, so its area is
    exactly width * m whatever the geometry.
    """
    if isinstance(gap, str):
        gap = GapSpec.parse(gap)
    width = gap.width if gap.width is not None else max(n // 4, 1)

    truth = np.full((m, n), BACKGROUND)
    top, bottom = (3 * m) // 8, (5 * m) // 8
    truth[top:bottom, :] = STRIPE

    offsets = _gap_offsets(gap.kind, m, width)
    starts = (n - width) // 2 + offsets
    if width > n or starts.min() < 0 or starts.max() + width > n:
        raise ParameterError(f"{gap.kind} gap of width {width} does not fit a {m}x{n} image")
    cols = np.arange(n)
    missing = (cols[None, :] >= starts[:, None]) & (cols[None, :] < starts[:, None] + width)
    log.debug("[degrade] stripe %dx%d gap=%s width=%d", m, n, gap.kind, width)
    return truth, ~missing


def make_shapes_fixture(m: int, n: int) -> ScalarField:
    """
    Piecewise-smooth test image: flat background, a horizontal ramp band,
    a smooth radial dome and a sharp-edged bright rectangle.
    """
    if m < 32 or n < 32:
        raise ParameterError(f"shapes fixture needs at least 32x32 (got {m}x{n})")
    yy, xx = np.mgrid[0:m, 0:n].astype(np.float64)
    image = np.full((m, n), 0.1)

    band = yy < m // 4
    image[band] = (0.2 + 0.6 * xx / (n - 1))[band]

    cy, cx = 5 * m / 8, n / 4
    spread = min(m, n) / 6
    dome = 0.6 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * spread**2))
    lower = ~band
    image[lower] += dome[lower]

    rect = (yy >= m // 2) & (yy < 7 * m // 8) & (xx >= 5 * n // 8) & (xx < 7 * n // 8)
    image[rect] = 0.9
    return np.clip(image, 0.0, 1.0)
