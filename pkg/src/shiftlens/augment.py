"""Deterministic, seeded implementations of the nine augmentations.

Every augmentation is applied with probability 1; randomness enters only
through parameter sampling and noise fills, both driven by a counter-based
Philox generator keyed by SHA-256 of (global seed, image key, augmentation
name, stream label). The per-task seed therefore depends only on those
identifiers, never on scheduling, so any worker layout reproduces the same
bytes.

Geometric transforms sample with bilinear interpolation and mirrored
(reflect-101) borders, which keeps constant images exactly fixed and never
widens an image's value range.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ImageTooSmall, ParamMismatch
from .imagecore import float_to_u8, resize_bilinear, to_grayscale, u8_to_float, validate_image_u8


class Augmentation(str, Enum):
    GAUSS_NOISE = "GaussNoise"
    GAUSSIAN_BLUR = "GaussianBlur"
    COLOR_JITTER = "ColorJitter"
    SHIFT_SCALE_ROTATE = "ShiftScaleRotate"
    HORIZONTAL_FLIP = "HorizontalFlip"
    ELASTIC_TRANSFORM = "ElasticTransform"
    PERSPECTIVE = "Perspective"
    RANDOM_BRIGHTNESS_CONTRAST = "RandomBrightnessContrast"
    COARSE_DROPOUT = "CoarseDropout"


AUGMENTATION_ORDER: tuple[Augmentation, ...] = tuple(Augmentation)
AUGMENTATION_NAMES: tuple[str, ...] = tuple(a.value for a in Augmentation)

NOISE_STD_RANGE = (0.44, 0.88)
BLUR_KERNELS = (3, 5, 7)
JITTER_FACTOR_RANGE = (0.8, 1.2)
JITTER_HUE_LIMIT = 0.2
SSR_SHIFT_LIMIT = 0.0625
SSR_SCALE_RANGE = (0.9, 1.1)
SSR_ANGLE_LIMIT = 15.0
ELASTIC_ALPHA = 30.0
ELASTIC_SIGMA = 60.0
PERSPECTIVE_SCALE_RANGE = (0.05, 0.1)
BRIGHTNESS_CONTRAST_LIMIT = 0.2
DROPOUT_HOLE_RANGE = (6, 8)
DROPOUT_HOLE_SIZE = 16


# --- seeding -------------------------------------------------------------------


def task_seed(global_seed: int, image_key: str, augmentation_name: str) -> int:
    """64-bit per-task seed derived by hashing the identifying triple."""
    text = f"{global_seed}\x1f{image_key}\x1f{augmentation_name}"
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Philox (counter-based) generator keyed by SHA-256 of (seed, label).

    Distinct labels ("params", "apply", ...) give independent streams for
    the same task seed.
    """
    digest = hashlib.sha256(f"{seed}\x1f{label}".encode("utf-8")).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


# --- sampled parameters --------------------------------------------------------


@dataclass(frozen=True)
class GaussNoiseParams:
    noise_std: float
    seed: int  # noise values are drawn at apply time from this seed


@dataclass(frozen=True)
class GaussianBlurParams:
    kernel: int


@dataclass(frozen=True)
class ColorJitterParams:
    brightness: float
    contrast: float
    saturation: float
    hue: float  # fraction of the hue circle, in [-0.2, 0.2]


@dataclass(frozen=True)
class ShiftScaleRotateParams:
    shift_x: float  # fraction of width
    shift_y: float  # fraction of height
    scale: float
    angle: float  # degrees


@dataclass(frozen=True)
class HorizontalFlipParams:
    pass


@dataclass(frozen=True)
class ElasticTransformParams:
    alpha: float
    sigma: float
    seed: int  # displacement fields are drawn at apply time


@dataclass(frozen=True)
class PerspectiveParams:
    # pixel offsets (dx, dy) of the four corners: tl, tr, br, bl
    offsets: tuple[float, float, float, float, float, float, float, float]


@dataclass(frozen=True)
class RandomBrightnessContrastParams:
    brightness_delta: float
    contrast_delta: float


@dataclass(frozen=True)
class CoarseDropoutParams:
    holes: tuple[tuple[int, int], ...]  # (row, col) top-left corners
    seed: int  # fill values are drawn at apply time


AugParams = (
    GaussNoiseParams
    | GaussianBlurParams
    | ColorJitterParams
    | ShiftScaleRotateParams
    | HorizontalFlipParams
    | ElasticTransformParams
    | PerspectiveParams
    | RandomBrightnessContrastParams
    | CoarseDropoutParams
)

_PARAM_TYPES: dict[Augmentation, type] = {
    Augmentation.GAUSS_NOISE: GaussNoiseParams,
    Augmentation.GAUSSIAN_BLUR: GaussianBlurParams,
    Augmentation.COLOR_JITTER: ColorJitterParams,
    Augmentation.SHIFT_SCALE_ROTATE: ShiftScaleRotateParams,
    Augmentation.HORIZONTAL_FLIP: HorizontalFlipParams,
    Augmentation.ELASTIC_TRANSFORM: ElasticTransformParams,
    Augmentation.PERSPECTIVE: PerspectiveParams,
    Augmentation.RANDOM_BRIGHTNESS_CONTRAST: RandomBrightnessContrastParams,
    Augmentation.COARSE_DROPOUT: CoarseDropoutParams,
}


def sample_params(
    aug: Augmentation, seed: int, height: int, width: int
) -> AugParams:
    """Draw an augmentation's parameters from its per-task seed.

    The draw order within each augmentation is fixed (documented by the
    code order below); identical (aug, seed, height, width) always produce
    identical parameters.
    """
    gen = rng_for(seed, "params")
    if aug is Augmentation.GAUSS_NOISE:
        return GaussNoiseParams(noise_std=float(gen.uniform(*NOISE_STD_RANGE)), seed=seed)
    if aug is Augmentation.GAUSSIAN_BLUR:
        return GaussianBlurParams(kernel=BLUR_KERNELS[int(gen.integers(0, len(BLUR_KERNELS)))])
    if aug is Augmentation.COLOR_JITTER:
        lo, hi = JITTER_FACTOR_RANGE
        return ColorJitterParams(
            brightness=float(gen.uniform(lo, hi)),
            contrast=float(gen.uniform(lo, hi)),
            saturation=float(gen.uniform(lo, hi)),
            hue=float(gen.uniform(-JITTER_HUE_LIMIT, JITTER_HUE_LIMIT)),
        )
    if aug is Augmentation.SHIFT_SCALE_ROTATE:
        return ShiftScaleRotateParams(
            shift_x=float(gen.uniform(-SSR_SHIFT_LIMIT, SSR_SHIFT_LIMIT)),
            shift_y=float(gen.uniform(-SSR_SHIFT_LIMIT, SSR_SHIFT_LIMIT)),
            scale=float(gen.uniform(*SSR_SCALE_RANGE)),
            angle=float(gen.uniform(-SSR_ANGLE_LIMIT, SSR_ANGLE_LIMIT)),
        )
    if aug is Augmentation.HORIZONTAL_FLIP:
        return HorizontalFlipParams()
    if aug is Augmentation.ELASTIC_TRANSFORM:
        return ElasticTransformParams(alpha=ELASTIC_ALPHA, sigma=ELASTIC_SIGMA, seed=seed)
    if aug is Augmentation.PERSPECTIVE:
        s = float(gen.uniform(*PERSPECTIVE_SCALE_RANGE))
        offsets = []
        for _corner in range(4):
            offsets.append(float(gen.uniform(-s, s)) * width)
            offsets.append(float(gen.uniform(-s, s)) * height)
        return PerspectiveParams(offsets=tuple(offsets))
    if aug is Augmentation.RANDOM_BRIGHTNESS_CONTRAST:
        limit = BRIGHTNESS_CONTRAST_LIMIT
        return RandomBrightnessContrastParams(
            brightness_delta=float(gen.uniform(-limit, limit)),
            contrast_delta=float(gen.uniform(-limit, limit)),
        )
    if aug is Augmentation.COARSE_DROPOUT:
        size = DROPOUT_HOLE_SIZE
        if min(height, width) < size:
            raise ImageTooSmall(
                f"{height}x{width} image cannot hold a {size}x{size} dropout hole"
            )
        count = int(gen.integers(DROPOUT_HOLE_RANGE[0], DROPOUT_HOLE_RANGE[1] + 1))
        holes = tuple(
            (int(gen.integers(0, height - size + 1)), int(gen.integers(0, width - size + 1)))
            for _ in range(count)
        )
        return CoarseDropoutParams(holes=holes, seed=seed)
    raise ValueError(f"unknown augmentation {aug!r}")


# --- sampling helpers ----------------------------------------------------------


def _reflect_coords(coords: np.ndarray, n: int) -> np.ndarray:
    """Mirror float coordinates into [0, n-1] without repeating the edge."""
    if n == 1:
        return np.zeros_like(coords)
    period = 2.0 * (n - 1)
    coords = np.abs(np.remainder(coords, period))
    return np.where(coords > n - 1, period - coords, coords)


def _bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample an (h, w, c) image at float coordinates with mirrored borders.

    Uses the lerp form a + t*(b - a), which reproduces constant regions
    bit-exactly.
    """
    h, w = img.shape[:2]
    ys = _reflect_coords(ys, h)
    xs = _reflect_coords(xs, w)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[..., None]
    fx = (xs - x0)[..., None]
    v00 = img[y0, x0]
    v01 = img[y0, x1]
    v10 = img[y1, x0]
    v11 = img[y1, x1]
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    return top + fy * (bottom - top)


def _smooth(field: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian smoothing with mirrored borders."""
    out = gaussian_filter1d(field, sigma, axis=0, mode="mirror", radius=radius)
    return gaussian_filter1d(out, sigma, axis=1, mode="mirror", radius=radius)


def _rgb_to_hsv(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    chroma = maxc - minc
    safe_chroma = np.where(chroma == 0.0, 1.0, chroma)
    hue = np.where(
        maxc == r,
        np.remainder((g - b) / safe_chroma, 6.0),
        np.where(maxc == g, (b - r) / safe_chroma + 2.0, (r - g) / safe_chroma + 4.0),
    )
    hue = np.where(chroma == 0.0, 0.0, hue / 6.0)
    sat = np.where(maxc == 0.0, 0.0, chroma / np.where(maxc == 0.0, 1.0, maxc))
    return hue, sat, maxc


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.intp) % 6
    channels = [
        np.choose(i, [v, q, p, p, t, v]),
        np.choose(i, [t, v, v, q, p, p]),
        np.choose(i, [p, p, t, v, v, q]),
    ]
    return np.stack(channels, axis=-1)


def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    return ii, jj


# --- apply functions -----------------------------------------------------------


def _apply_gauss_noise(img: np.ndarray, p: GaussNoiseParams) -> np.ndarray:
    gen = rng_for(p.seed, "apply")
    noise = gen.normal(0.0, p.noise_std, size=img.shape)
    return np.clip(img + noise, 0.0, 1.0)


def blur_sigma(kernel: int) -> float:
    """Sigma for a given odd kernel size: 0.3 * ((k - 1) * 0.5 - 1) + 0.8."""
    return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8


def _apply_gaussian_blur(img: np.ndarray, p: GaussianBlurParams) -> np.ndarray:
    out = _smooth(img, blur_sigma(p.kernel), p.kernel // 2)
    return np.clip(out, 0.0, 1.0)


def _apply_color_jitter(img: np.ndarray, p: ColorJitterParams) -> np.ndarray:
    out = np.clip(img * p.brightness, 0.0, 1.0)
    mean_gray = float(to_grayscale(out).mean())
    out = np.clip(mean_gray + p.contrast * (out - mean_gray), 0.0, 1.0)
    gray = to_grayscale(out)[..., None]
    out = np.clip(gray + p.saturation * (out - gray), 0.0, 1.0)
    h, s, v = _rgb_to_hsv(out)
    out = _hsv_to_rgb(np.remainder(h + p.hue, 1.0), s, v)
    return np.clip(out, 0.0, 1.0)


def _apply_shift_scale_rotate(img: np.ndarray, p: ShiftScaleRotateParams) -> np.ndarray:
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ty, tx = p.shift_y * h, p.shift_x * w
    theta = math.radians(p.angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    ii, jj = _grid(h, w)
    # invert the forward map dst = scale * R(theta) (src - c) + c + t
    dx = jj - cx - tx
    dy = ii - cy - ty
    xs = (cos_t * dx + sin_t * dy) / p.scale + cx
    ys = (-sin_t * dx + cos_t * dy) / p.scale + cy
    return np.clip(_bilinear_sample(img, ys, xs), 0.0, 1.0)


def _apply_horizontal_flip(img: np.ndarray, p: HorizontalFlipParams) -> np.ndarray:
    return img[:, ::-1].copy()


def _apply_elastic(img: np.ndarray, p: ElasticTransformParams) -> np.ndarray:
    h, w = img.shape[:2]
    gen = rng_for(p.seed, "apply")
    radius = math.ceil(3.0 * p.sigma)
    dx = _smooth(gen.uniform(-1.0, 1.0, (h, w)), p.sigma, radius) * p.alpha
    dy = _smooth(gen.uniform(-1.0, 1.0, (h, w)), p.sigma, radius) * p.alpha
    ii, jj = _grid(h, w)
    return np.clip(_bilinear_sample(img, ii + dy, jj + dx), 0.0, 1.0)


def _homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 homography mapping src corner points onto dst (m22 fixed at 1)."""
    rows = []
    rhs = []
    for (u, v), (x, y) in zip(src, dst):
        rows.append([u, v, 1, 0, 0, 0, -u * x, -v * x])
        rhs.append(x)
        rows.append([0, 0, 0, u, v, 1, -u * y, -v * y])
        rhs.append(y)
    m = np.linalg.solve(np.array(rows, dtype=np.float64), np.array(rhs, dtype=np.float64))
    return np.append(m, 1.0).reshape(3, 3)


def _apply_perspective(img: np.ndarray, p: PerspectiveParams) -> np.ndarray:
    h, w = img.shape[:2]
    corners = np.array(
        [[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=np.float64
    )
    offsets = np.array(p.offsets, dtype=np.float64).reshape(4, 2)
    moved = corners + offsets
    # inverse mapping: output (= moved-corner frame) back to source corners
    m = _homography(moved, corners)
    ii, jj = _grid(h, w)
    denom = m[2, 0] * jj + m[2, 1] * ii + m[2, 2]
    xs = (m[0, 0] * jj + m[0, 1] * ii + m[0, 2]) / denom
    ys = (m[1, 0] * jj + m[1, 1] * ii + m[1, 2]) / denom
    return np.clip(_bilinear_sample(img, ys, xs), 0.0, 1.0)


def _apply_brightness_contrast(
    img: np.ndarray, p: RandomBrightnessContrastParams
) -> np.ndarray:
    out = (img - 0.5) * (1.0 + p.contrast_delta) + 0.5 + p.brightness_delta
    return np.clip(out, 0.0, 1.0)


def _apply_coarse_dropout(img: np.ndarray, p: CoarseDropoutParams) -> np.ndarray:
    gen = rng_for(p.seed, "apply")
    size = DROPOUT_HOLE_SIZE
    out = img.copy()
    for row, col in p.holes:
        out[row : row + size, col : col + size] = gen.uniform(0.0, 1.0, (size, size, img.shape[2]))
    return out


_APPLY = {
    Augmentation.GAUSS_NOISE: _apply_gauss_noise,
    Augmentation.GAUSSIAN_BLUR: _apply_gaussian_blur,
    Augmentation.COLOR_JITTER: _apply_color_jitter,
    Augmentation.SHIFT_SCALE_ROTATE: _apply_shift_scale_rotate,
    Augmentation.HORIZONTAL_FLIP: _apply_horizontal_flip,
    Augmentation.ELASTIC_TRANSFORM: _apply_elastic,
    Augmentation.PERSPECTIVE: _apply_perspective,
    Augmentation.RANDOM_BRIGHTNESS_CONTRAST: _apply_brightness_contrast,
    Augmentation.COARSE_DROPOUT: _apply_coarse_dropout,
}


def apply_augmentation(aug: Augmentation, img: np.ndarray, params: AugParams) -> np.ndarray:
    """Apply one augmentation to a float [0, 1] RGB image.

    The output stays in [0, 1]. Raises ParamMismatch when params does not
    belong to the requested augmentation.
    """
    aug = Augmentation(aug)
    expected = _PARAM_TYPES[aug]
    if type(params) is not expected:
        raise ParamMismatch(
            f"{aug.value} expects {expected.__name__}, got {type(params).__name__}"
        )
    img = np.asarray(img, dtype=np.float64)
    return _APPLY[aug](img, params)


def augment_image_set(
    img: np.ndarray,
    global_seed: int,
    image_key: str,
    size: tuple[int, int] = (224, 224),
    augmentations: tuple[Augmentation, ...] = AUGMENTATION_ORDER,
) -> dict[str, np.ndarray]:
    """Resize an image and produce its full augmented set.

    Returns a dict with the resized original under "original" plus one
    uint8 entry per augmentation. Outputs depend only on
    (global_seed, image_key, pixel data, size), never on scheduling.
    """
    img = validate_image_u8(img)
    original = resize_bilinear(img, size[0], size[1])
    base = u8_to_float(original)
    results: dict[str, np.ndarray] = {"original": original}
    for aug in augmentations:
        seed = task_seed(global_seed, image_key, aug.value)
        params = sample_params(aug, seed, base.shape[0], base.shape[1])
        results[aug.value] = float_to_u8(apply_augmentation(aug, base, params))
    return results
