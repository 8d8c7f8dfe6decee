"""Per-image comparison metrics.

Six metrics quantify how far an augmented image drifted from its original:
cosine similarity and L2 distance on encoder embeddings, mean-squared-error
similarity on attention maps, per-patch MSE similarity, edge-map similarity,
and detail (texture) preservation.

Pixel-domain metrics are defined on 8-bit intensity units. They accept
uint8 arrays as produced by the augmentation pipeline, and also float
arrays already expressed in [0, 255] units (useful for exact-value tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, ShapeMismatch, ZeroVector
from .imagecore import edge_map, extract_patch_grid, to_grayscale, u8_to_float

UNIFORM_SIGMA_THRESHOLD = 1e-6


@dataclass
class Bundle:
    """Everything known about one image: pixels plus optional tensors."""

    image: np.ndarray
    embedding: np.ndarray | None = None
    attention: np.ndarray | None = None


@dataclass
class MetricRecord:
    """All six metric values for one (image, augmentation) pair.

    A None field means the metric was undefined for this pair (missing
    tensor data, or no valid patches for detail similarity). Nones are
    carried through to reports as explicit nulls, never silently dropped
    or replaced by defaults.
    """

    image_key: str
    augmentation: str
    cosine_sim: float | None = None
    l2_dist: float | None = None
    attn_sim: float | None = None
    patch_sim: float | None = None
    edge_sim: float | None = None
    detail_sim: float | None = None

    METRIC_FIELDS = ("cosine_sim", "l2_dist", "attn_sim", "patch_sim", "edge_sim", "detail_sim")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Computed with plain numpy reductions (not BLAS) so results are
    bit-reproducible across library builds.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"vector dims differ: {u.shape} vs {v.shape}")
    nu = np.sqrt(np.sum(u * u))
    nv = np.sqrt(np.sum(v * v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero vectors")
    return float(np.clip(np.sum(u * v) / (nu * nv), -1.0, 1.0))


def l2_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Euclidean distance between two vectors (plain numpy reductions)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"vector dims differ: {u.shape} vs {v.shape}")
    diff = u - v
    return float(np.sqrt(np.sum(diff * diff)))


def attention_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """1 / (1 + MSE) similarity between two attention maps, in (0, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"attention map shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    return 1.0 / (1.0 + mse)


def patch_similarity(i1: np.ndarray, i2: np.ndarray, grid: int = 4) -> float:
    """Mean over a 4x4 patch grid of 1 / (1 + MSE_k / 255^2), in (0, 1].

    MSE_k averages squared differences over every pixel and channel of
    patch k, on raw 8-bit values.
    """
    i1 = np.asarray(i1)
    i2 = np.asarray(i2)
    if i1.shape != i2.shape:
        raise ShapeMismatch(f"image shapes differ: {i1.shape} vs {i2.shape}")
    p1 = extract_patch_grid(i1.astype(np.float64), grid).patches
    p2 = extract_patch_grid(i2.astype(np.float64), grid).patches
    axes = tuple(range(1, p1.ndim))
    mse = np.mean((p1 - p2) ** 2, axis=axes)
    return float(np.mean(1.0 / (1.0 + mse / 255.0**2)))


def edge_similarity(i1: np.ndarray, i2: np.ndarray) -> float:
    """1 - mean absolute difference of max-normalized edge maps, in [0, 1].

    Edge maps come from forward finite differences of the grayscale images,
    so a constant intensity offset that does not clip leaves the score at 1.
    """
    i1 = np.asarray(i1)
    i2 = np.asarray(i2)
    if i1.shape != i2.shape:
        raise ShapeMismatch(f"image shapes differ: {i1.shape} vs {i2.shape}")
    e1 = edge_map(to_grayscale(u8_to_float(i1)))
    e2 = edge_map(to_grayscale(u8_to_float(i2)))
    return float(1.0 - np.mean(np.abs(e1 - e2)))


def detail_similarity(i1: np.ndarray, i2: np.ndarray, grid: int = 4) -> float | None:
    """Texture preservation: mean of exp(-|log(sigma'_k / sigma_k)|).

    sigma is the population standard deviation over all pixels and channels
    of a patch, in 8-bit units. Patch pairs where either side is uniform
    (sigma below 1e-6) are excluded; with no valid pairs left the metric is
    undefined and None is returned.
    """
    i1 = np.asarray(i1)
    i2 = np.asarray(i2)
    if i1.shape != i2.shape:
        raise ShapeMismatch(f"image shapes differ: {i1.shape} vs {i2.shape}")
    p1 = extract_patch_grid(i1.astype(np.float64), grid).patches
    p2 = extract_patch_grid(i2.astype(np.float64), grid).patches
    axes = tuple(range(1, p1.ndim))
    s1 = np.std(p1, axis=axes)
    s2 = np.std(p2, axis=axes)
    valid = (s1 >= UNIFORM_SIGMA_THRESHOLD) & (s2 >= UNIFORM_SIGMA_THRESHOLD)
    if not np.any(valid):
        return None
    ratios = np.exp(-np.abs(np.log(s2[valid] / s1[valid])))
    return float(np.mean(ratios))


def compute_record(
    image_key: str,
    augmentation: str,
    original: Bundle,
    augmented: Bundle,
    grid: int = 4,
) -> MetricRecord:
    """Assemble all six metrics for one (image, augmentation) pair.

    Embedding and attention metrics stay None when either bundle lacks the
    corresponding tensor. Errors from individual metrics propagate with the
    image key prepended for context.
    """
    record = MetricRecord(image_key=image_key, augmentation=augmentation)
    try:
        if original.embedding is not None and augmented.embedding is not None:
            record.cosine_sim = cosine_similarity(original.embedding, augmented.embedding)
            record.l2_dist = l2_distance(original.embedding, augmented.embedding)
        if original.attention is not None and augmented.attention is not None:
            record.attn_sim = attention_similarity(original.attention, augmented.attention)
        record.patch_sim = patch_similarity(original.image, augmented.image, grid)
        record.edge_sim = edge_similarity(original.image, augmented.image)
        record.detail_sim = detail_similarity(original.image, augmented.image, grid)
    except Exception as exc:
        exc.args = (f"{image_key}/{augmentation}: {exc}",) + exc.args[1:]
        raise
    return record
