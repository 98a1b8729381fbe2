"""
Image containers, periodic indexing and raster I/O.

Fields are plain float64 numpy arrays in [0, 1]; rows are the y axis and
columns the x axis. Masks are boolean arrays where True marks a known pixel.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

try:
    from PIL import Image, UnidentifiedImageError
except Exception:
    Image = None
    UnidentifiedImageError = OSError

from ..errors import DimensionMismatchError, ImageFormatError

log = logging.getLogger(__name__)

ScalarField = NDArray[np.float64]
MaskField = NDArray[np.bool_]

MASK_THRESHOLD = 128
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def wrap_index(i, n: int):
    """Nonnegative i mod n; works elementwise on integer arrays."""
    return i % n


def as_field(data, name: str = "field") -> ScalarField:
    """Coerce to a finite float64 array of shape M x N (or M x N x C)."""
    field = np.asarray(data, dtype=np.float64)
    if field.ndim not in (2, 3) or field.shape[0] < 2 or field.shape[1] < 2:
        raise DimensionMismatchError(f"{name} must be at least 2x2, got shape {field.shape}")
    if not np.all(np.isfinite(field)):
        raise ValueError(f"{name} contains non-finite samples")
    return field


def check_same_shape(*fields: np.ndarray) -> None:
    shapes = {f.shape[:2] for f in fields}
    if len(shapes) > 1:
        raise DimensionMismatchError(f"fields disagree in dimensions: {sorted(shapes)}")


def luminance(rgb: ScalarField) -> ScalarField:
    """ITU-R 601 luma, the same weighting Pillow's convert("L") applies."""
    if rgb.ndim == 2:
        return rgb
    channels = rgb.shape[2]
    if channels == 1:
        return rgb[..., 0]
    return rgb[..., :3] @ LUMA_WEIGHTS


def full_mask(shape: tuple[int, ...]) -> MaskField:
    return np.ones(shape[:2], dtype=bool)


def _open_raster(path: str | Path) -> "Image.Image":
    if Image is None:
        raise ImageFormatError("Pillow is required for image I/O")
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as err:
        raise ImageFormatError(f"cannot decode {path}: {err}") from err
    if img.width == 0 or img.height == 0:
        raise ImageFormatError(f"{path} is zero-sized")
    return img


def load_image(path: str | Path, channelwise: bool = False) -> ScalarField:
    """
    Read an 8-bit grayscale or color raster into [0, 1].

    Color input is reduced to luminance unless ``channelwise`` is set, in
    which case an M x N x 3 field is returned.
    """
    img = _open_raster(path)
    if img.mode in ("I;16", "I", "F"):
        raise ImageFormatError(f"{path}: only 8-bit images are supported (mode {img.mode})")
    if channelwise and img.mode not in ("L", "1", "LA"):
        img = img.convert("RGB")
    else:
        img = img.convert("L")
    data = np.asarray(img, dtype=np.float64) / 255.0
    log.debug("[grid] loaded %s shape=%s", path, data.shape)
    return as_field(data, str(path))


def to_bytes(field: ScalarField) -> NDArray[np.uint8]:
    return np.rint(np.clip(field, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(field: ScalarField, path: str | Path) -> None:
    if Image is None:
        raise ImageFormatError("Pillow is required for image I/O")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = to_bytes(field)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[..., 0]
    try:
        Image.fromarray(pixels).save(path)
    except (ValueError, KeyError) as err:
        raise ImageFormatError(f"cannot write {path}: {err}") from err
    log.debug("[grid] wrote %s", path)


def load_mask(path: str | Path) -> MaskField:
    """Gray value >= 128 marks a missing pixel; the returned array is True where known."""
    img = _open_raster(path).convert("L")
    return np.asarray(img, dtype=np.uint8) < MASK_THRESHOLD


def save_mask(known: MaskField, path: str | Path) -> None:
    save_image(np.where(known, 0.0, 1.0), path)
