"""shiftlens: quantify how image augmentations shift encoder representations.

A deterministic augmentation pipeline (nine photometric and geometric
transforms), six image/embedding comparison metrics, and the statistics
layer (pairwise distances, average-linkage clustering, KDE, normalized
comparison tables) behind the command line reports.
"""

from .augment import (
    AUGMENTATION_NAMES,
    AUGMENTATION_ORDER,
    Augmentation,
    apply_augmentation,
    augment_image_set,
    sample_params,
    task_seed,
)
from .imagecore import (
    GradientPair,
    PatchGrid,
    edge_map,
    extract_patch_grid,
    float_to_u8,
    gradient_maps,
    resize_bilinear,
    to_grayscale,
    u8_to_float,
)
from .metrics import (
    Bundle,
    MetricRecord,
    attention_similarity,
    compute_record,
    cosine_similarity,
    detail_similarity,
    edge_similarity,
    l2_distance,
    patch_similarity,
)
from .stats import (
    AggregateTable,
    DensityEstimate,
    aggregate_records,
    augmentation_feature_vectors,
    average_linkage,
    condensed_to_square,
    flat_clusters,
    kde_gaussian,
    minmax_normalize,
    pairwise_distances,
    square_to_condensed,
)
from .tensorio import RunManifest, load_manifest, read_tensor, save_manifest, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AUGMENTATION_NAMES",
    "AUGMENTATION_ORDER",
    "AggregateTable",
    "Augmentation",
    "Bundle",
    "DensityEstimate",
    "GradientPair",
    "MetricRecord",
    "PatchGrid",
    "RunManifest",
    "aggregate_records",
    "apply_augmentation",
    "attention_similarity",
    "augment_image_set",
    "augmentation_feature_vectors",
    "average_linkage",
    "compute_record",
    "condensed_to_square",
    "cosine_similarity",
    "detail_similarity",
    "edge_map",
    "edge_similarity",
    "extract_patch_grid",
    "flat_clusters",
    "float_to_u8",
    "gradient_maps",
    "kde_gaussian",
    "l2_distance",
    "load_manifest",
    "minmax_normalize",
    "pairwise_distances",
    "patch_similarity",
    "read_tensor",
    "resize_bilinear",
    "sample_params",
    "save_manifest",
    "square_to_condensed",
    "task_seed",
    "to_grayscale",
    "u8_to_float",
    "write_tensor",
]
