"""Image representations and low-level raster operations.

Array conventions used across the toolkit:

- ``ImageU8``: ``(h, w, 3)`` uint8 RGB array.
- ``ImageF``: ``(h, w, 3)`` float64 RGB array with values in [0, 1].
- ``GrayImage``: ``(h, w)`` float64 array with values in [0, 1].

Conversion between the two RGB domains divides by 255 one way and
multiplies by 255 with half-up rounding the other way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionTooSmall, GridTooFine

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


class GradientPair(NamedTuple):
    """Forward-difference gradients along columns (gx) and rows (gy)."""

    gx: np.ndarray
    gy: np.ndarray


@dataclass(frozen=True)
class PatchGrid:
    """A g x g grid of equally sized patches cut from an image.

    ``patches`` has shape ``(g * g, ph, pw)`` or ``(g * g, ph, pw, c)`` with
    patch (r, c) stored at index ``r * g + c``. Remainder rows/columns that
    do not fill a whole patch are discarded.
    """

    grid_size: int
    patches: np.ndarray
    patch_height: int
    patch_width: int


def u8_to_float(img: np.ndarray) -> np.ndarray:
    """Convert a uint8 image to the float [0, 1] working domain."""
    return np.asarray(img, dtype=np.float64) / 255.0


def float_to_u8(img: np.ndarray) -> np.ndarray:
    """Convert a float [0, 1] image back to uint8 (half-up rounding, clamped)."""
    scaled = np.floor(np.asarray(img, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma grayscale: 0.299 R + 0.587 G + 0.114 B.

    The weights form a convex combination, so outputs stay inside the value
    range of the input.
    """
    img = np.asarray(img, dtype=np.float64)
    return img @ GRAY_WEIGHTS


def gradient_maps(gray: np.ndarray) -> GradientPair:
    """Forward finite differences with a zero-padded last column/row.

    Raises DimensionTooSmall for images under 2x2, where a difference along
    one of the axes cannot be formed.
    """
    gray = np.asarray(gray, dtype=np.float64)
    h, w = gray.shape
    if h < 2 or w < 2:
        raise DimensionTooSmall(f"need at least 2x2 pixels, got {h}x{w}")
    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    gx[:, :-1] = gray[:, 1:] - gray[:, :-1]
    gy[:-1, :] = gray[1:, :] - gray[:-1, :]
    return GradientPair(gx=gx, gy=gy)


def edge_map(gray: np.ndarray) -> np.ndarray:
    """Gradient-magnitude edge map normalized by its maximum.

    Returns (|gx| + |gy|) / max over the image; an all-zero gradient field
    (constant image) maps to the all-zero raster. Output values lie in [0, 1].
    """
    gx, gy = gradient_maps(gray)
    e = np.abs(gx) + np.abs(gy)
    peak = e.max()
    if peak == 0.0:
        return e
    return e / peak


def extract_patch_grid(img: np.ndarray, grid_size: int) -> PatchGrid:
    """Cut an image into a grid_size x grid_size grid of equal patches.

    Patch dimensions come from integer division; trailing remainder
    rows/columns are dropped. Works on (h, w) and (h, w, c) arrays.
    """
    img = np.asarray(img)
    if grid_size < 1:
        raise GridTooFine(f"grid size must be >= 1, got {grid_size}")
    h, w = img.shape[:2]
    ph, pw = h // grid_size, w // grid_size
    if ph == 0 or pw == 0:
        raise GridTooFine(
            f"{grid_size}x{grid_size} grid leaves empty patches on a {h}x{w} image"
        )
    g = grid_size
    trimmed = img[: ph * g, : pw * g]
    if img.ndim == 2:
        patches = (
            trimmed.reshape(g, ph, g, pw).transpose(0, 2, 1, 3).reshape(g * g, ph, pw)
        )
    else:
        c = img.shape[2]
        patches = (
            trimmed.reshape(g, ph, g, pw, c)
            .transpose(0, 2, 1, 3, 4)
            .reshape(g * g, ph, pw, c)
        )
    return PatchGrid(grid_size=g, patches=patches, patch_height=ph, patch_width=pw)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a uint8 image.

    Source coordinates follow the half-pixel convention
    ``src = (dst + 0.5) * scale - 0.5`` clamped into the source extent;
    interpolated values are rounded half-up back to uint8. Resizing to the
    input size reproduces the input exactly.
    """
    img = np.asarray(img)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    h, w = img.shape[:2]

    src_y = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    src_x = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(src_y).astype(np.intp)
    x0 = np.floor(src_x).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (src_y - y0)[:, None, None] if img.ndim == 3 else (src_y - y0)[:, None]
    fx = (src_x - x0)[None, :, None] if img.ndim == 3 else (src_x - x0)[None, :]

    data = img.astype(np.float64)
    v00 = data[np.ix_(y0, x0)]
    v01 = data[np.ix_(y0, x1)]
    v10 = data[np.ix_(y1, x0)]
    v11 = data[np.ix_(y1, x1)]
    # lerp form keeps constant regions bit-exact
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    out = top + fy * (bottom - top)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def validate_image_u8(img: np.ndarray) -> np.ndarray:
    """Check the (h, w, 3) uint8 layout and return the array."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB array, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 data, got {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    return img
