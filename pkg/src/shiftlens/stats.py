"""Distance matrices, average-linkage clustering, KDE, and aggregation.

The analysis layer: pairwise distances in condensed form, UPGMA
agglomeration with flat cluster extraction, Gaussian kernel density
estimation with Scott bandwidth, min-max normalization, and the
per-augmentation aggregate table with its performance ranking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSamples,
    EmptyInput,
    MissingAugmentationData,
    NonzeroDiagonal,
    NotSymmetric,
    TooFewObservations,
)
from .metrics import MetricRecord, cosine_similarity, l2_distance

SIMILARITY_FIELDS = ("cosine_sim", "attn_sim", "patch_sim", "edge_sim", "detail_sim")
METRIC_FIELDS = MetricRecord.METRIC_FIELDS


def n_observations(condensed: np.ndarray) -> int:
    """Recover n from a length-n(n-1)/2 condensed distance vector."""
    m = len(condensed)
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if n * (n - 1) // 2 != m:
        raise ValueError(f"{m} is not a valid condensed vector length")
    return n


def pairwise_distances(X, metric: str = "euclidean") -> np.ndarray:
    """Condensed distance vector over rows of X, pairs in (i, j) order.

    metric is "euclidean" or "cosine" (cosine distance = 1 - similarity).
    """
    X = [np.asarray(row, dtype=np.float64) for row in X]
    n = len(X)
    if n < 2:
        raise TooFewObservations(f"need at least 2 observations, got {n}")
    if metric == "euclidean":
        dist = l2_distance
    elif metric == "cosine":
        def dist(u, v):
            return 1.0 - cosine_similarity(u, v)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    out = np.empty(n * (n - 1) // 2)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            out[k] = dist(X[i], X[j])
            k += 1
    return out


def condensed_to_square(condensed: np.ndarray) -> np.ndarray:
    """Expand a condensed distance vector into the symmetric square matrix."""
    condensed = np.asarray(condensed, dtype=np.float64)
    n = n_observations(condensed)
    square = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    square[iu] = condensed
    square[(iu[1], iu[0])] = condensed
    return square


def square_to_condensed(square: np.ndarray) -> np.ndarray:
    """Collapse a symmetric zero-diagonal matrix into condensed form."""
    square = np.asarray(square, dtype=np.float64)
    if square.ndim != 2 or square.shape[0] != square.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {square.shape}")
    if not np.array_equal(square, square.T):
        raise NotSymmetric("matrix is not symmetric")
    if np.any(np.diagonal(square) != 0.0):
        raise NonzeroDiagonal("matrix has nonzero diagonal entries")
    return square[np.triu_indices(square.shape[0], k=1)]


def average_linkage(condensed: np.ndarray) -> np.ndarray:
    """UPGMA agglomeration over a condensed distance vector.

    Returns the (n-1, 4) linkage matrix: each row (a, b, distance, size)
    merges clusters a and b (original observations are 0..n-1, the merge at
    row i creates cluster n+i). Inter-cluster distances follow the
    unweighted average of all cross pairs, maintained incrementally as
    d(Ci+Cj, Ck) = (|Ci| d(Ci,Ck) + |Cj| d(Cj,Ck)) / (|Ci|+|Cj|).
    Ties pick the lexicographically smallest (a, b) id pair.
    """
    condensed = np.asarray(condensed, dtype=np.float64)
    n = n_observations(condensed)
    if n < 2:
        raise TooFewObservations(f"need at least 2 observations, got {n}")

    dist: dict[tuple[int, int], float] = {}
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(condensed[k])
            k += 1
    sizes = {i: 1 for i in range(n)}
    active = list(range(n))
    rows = np.empty((n - 1, 4))
    next_id = n

    for step in range(n - 1):
        best_pair = None
        best_d = np.inf
        for a, b in itertools.combinations(active, 2):
            d = dist[(a, b)]
            if d < best_d:
                best_d = d
                best_pair = (a, b)
        a, b = best_pair
        merged_size = sizes[a] + sizes[b]
        rows[step] = (a, b, best_d, merged_size)
        for c in active:
            if c in (a, b):
                continue
            dac = dist.pop((min(a, c), max(a, c)))
            dbc = dist.pop((min(b, c), max(b, c)))
            dist[(c, next_id)] = (sizes[a] * dac + sizes[b] * dbc) / merged_size
        del dist[(a, b)]
        active = [c for c in active if c not in (a, b)]
        active.append(next_id)
        sizes[next_id] = merged_size
        next_id += 1
    return rows


def flat_clusters(linkage: np.ndarray, threshold: float) -> np.ndarray:
    """Cut a linkage at a distance threshold into flat cluster labels.

    Observations connected through merges at height <= threshold share a
    label. Labels are 1-based and assigned in order of first appearance by
    observation index.
    """
    linkage = np.asarray(linkage, dtype=np.float64)
    n = linkage.shape[0] + 1
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    members: dict[int, int] = {i: i for i in range(n)}  # cluster id -> one member obs
    for i, (a, b, d, _size) in enumerate(linkage):
        ra, rb = members[int(a)], members[int(b)]
        members[n + i] = ra
        if d <= threshold:
            parent[find(rb)] = find(ra)

    labels = np.zeros(n, dtype=np.intp)
    label_of_root: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        if root not in label_of_root:
            label_of_root[root] = len(label_of_root) + 1
        labels[i] = label_of_root[root]
    return labels


@dataclass
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def scott_bandwidth(samples: np.ndarray) -> float:
    """Scott's rule bandwidth: sample standard deviation times n^(-1/5)."""
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples)
    if n < 2:
        raise DegenerateSamples(f"need at least 2 samples, got {n}")
    sd = float(np.std(samples, ddof=1))
    if sd == 0.0:
        raise DegenerateSamples("samples have zero variance")
    return sd * n ** (-1.0 / 5.0)


def kde_gaussian(samples: np.ndarray, grid: np.ndarray) -> DensityEstimate:
    """Gaussian kernel density estimate evaluated on a grid.

    density(x) = (1 / (n h)) sum_i phi((x - s_i) / h) with the standard
    normal kernel and Scott's bandwidth h.
    """
    samples = np.asarray(samples, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    h = scott_bandwidth(samples)
    z = (grid[:, None] - samples[None, :]) / h
    density = np.exp(-0.5 * z**2).sum(axis=1) / (len(samples) * h * np.sqrt(2.0 * np.pi))
    return DensityEstimate(grid=grid, density=density, bandwidth=h)


def default_kde_grid(samples: np.ndarray, points: int = 257) -> np.ndarray:
    """Evaluation grid spanning the samples plus four bandwidths either side."""
    samples = np.asarray(samples, dtype=np.float64)
    h = scott_bandwidth(samples)
    return np.linspace(samples.min() - 4.0 * h, samples.max() + 4.0 * h, points)


def minmax_normalize(values) -> np.ndarray:
    """Affine map of values onto [0, 1]; a constant vector maps to all 0.5."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("cannot normalize an empty vector")
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full(values.shape, 0.5)
    return (values - lo) / (hi - lo)


@dataclass
class AggregateTable:
    """Per-augmentation metric means plus the normalized performance view.

    means[aug][metric] is the mean over records ignoring undefined cells
    (None when every record was undefined). normalized[aug][metric] holds
    per-metric min-max normalized means, with l2_dist additionally inverted
    (1 - x) so that larger is better everywhere. average_performance is the
    mean of an augmentation's defined normalized values; ranking sorts by it
    descending with ties broken by augmentation name.
    """

    augmentations: list[str]
    metrics: tuple[str, ...] = METRIC_FIELDS
    means: dict[str, dict[str, float | None]] = field(default_factory=dict)
    normalized: dict[str, dict[str, float | None]] = field(default_factory=dict)
    average_performance: dict[str, float | None] = field(default_factory=dict)
    ranking: list[str] = field(default_factory=list)


def aggregate_records(records: list[MetricRecord]) -> AggregateTable:
    """Aggregate per-record metrics into the per-augmentation table."""
    if not records:
        raise EmptyInput("no records to aggregate")
    augs = sorted({r.augmentation for r in records})
    table = AggregateTable(augmentations=augs)

    for aug in augs:
        table.means[aug] = {}
        rows = [r for r in records if r.augmentation == aug]
        for name in METRIC_FIELDS:
            values = [getattr(r, name) for r in rows if getattr(r, name) is not None]
            table.means[aug][name] = float(np.mean(values)) if values else None

    table.normalized = {aug: {name: None for name in METRIC_FIELDS} for aug in augs}
    for name in METRIC_FIELDS:
        defined = [aug for aug in augs if table.means[aug][name] is not None]
        if not defined:
            continue
        norm = minmax_normalize([table.means[aug][name] for aug in defined])
        if name == "l2_dist":
            norm = 1.0 - norm
        for aug, value in zip(defined, norm):
            table.normalized[aug][name] = float(value)

    for aug in augs:
        values = [v for v in table.normalized[aug].values() if v is not None]
        table.average_performance[aug] = float(np.mean(values)) if values else None

    table.ranking = sorted(
        augs,
        key=lambda a: (
            table.average_performance[a] is None,
            -(table.average_performance[a] or 0.0),
            a,
        ),
    )
    return table


def augmentation_feature_vectors(
    records: list[MetricRecord],
) -> tuple[list[str], list[str], np.ndarray]:
    """Per-augmentation embedding-distance profiles for clustering.

    The feature vector of an augmentation is its per-image L2 embedding
    distance to the original, over the image set common to all
    augmentations, in sorted image-key order. Returns (augmentation names,
    image keys, matrix) with one profile per row.
    """
    by_aug: dict[str, dict[str, float]] = {}
    for r in records:
        if r.l2_dist is not None:
            by_aug.setdefault(r.augmentation, {})[r.image_key] = r.l2_dist
    if not by_aug:
        raise MissingAugmentationData("no records carry embedding distances")
    augs = sorted(by_aug)
    key_sets = [set(by_aug[a]) for a in augs]
    common = key_sets[0]
    for s in key_sets[1:]:
        if s != common:
            raise MissingAugmentationData(
                "augmentations do not cover the same image set"
            )
    if not common:
        raise MissingAugmentationData("no images carry embedding distances")
    keys = sorted(common)
    matrix = np.array([[by_aug[a][k] for k in keys] for a in augs])
    return augs, keys, matrix
