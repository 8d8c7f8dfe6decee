"""Exception hierarchy shared across the toolkit.

Every error raised on bad data derives from ShiftLensError so the CLI can
map them to a single "data error" exit code.
"""


class ShiftLensError(Exception):
    """Base class for all toolkit errors."""


# --- raster operations -------------------------------------------------------

class DimensionTooSmall(ShiftLensError):
    """Image is too small for an operation needing at least 2 rows/columns."""


class GridTooFine(ShiftLensError):
    """Patch grid is finer than the image (some patch would be empty)."""


# --- augmentation ------------------------------------------------------------

class ImageTooSmall(ShiftLensError):
    """Image cannot hold the requested augmentation geometry."""


class ParamMismatch(ShiftLensError):
    """Parameter object does not belong to the requested augmentation."""


class DecodeError(ShiftLensError):
    """Image file could not be decoded."""


# --- metrics -----------------------------------------------------------------

class DimMismatch(ShiftLensError):
    """Vectors have different lengths."""


class ZeroVector(ShiftLensError):
    """Cosine similarity is undefined for a zero-norm vector."""


class ShapeMismatch(ShiftLensError):
    """Arrays have different shapes."""


# --- statistics --------------------------------------------------------------

class TooFewObservations(ShiftLensError):
    """At least two observations are required."""


class NotSymmetric(ShiftLensError):
    """Square distance matrix is not symmetric."""


class NonzeroDiagonal(ShiftLensError):
    """Square distance matrix has a nonzero diagonal."""


class DegenerateSamples(ShiftLensError):
    """Density estimation needs at least two samples with nonzero variance."""


class EmptyInput(ShiftLensError):
    """Aggregation received no records."""


class MissingAugmentationData(ShiftLensError):
    """Augmentations do not cover a common image set."""


# --- tensor and manifest I/O -------------------------------------------------

class TensorIOError(ShiftLensError):
    """Base class for tensor file format errors."""


class BadMagic(TensorIOError):
    """File does not start with the tensor format magic bytes."""


class UnsupportedVersion(TensorIOError):
    """Tensor file declares a version this reader does not understand."""


class UnsupportedDtype(TensorIOError):
    """Tensor file declares a dtype this reader does not understand."""


class InvalidDims(TensorIOError):
    """Tensor file header declares an unsupported dimensionality."""


class TruncatedPayload(TensorIOError):
    """Tensor payload length does not match the declared dimensions."""


class SchemaError(ShiftLensError):
    """Manifest JSON does not match the documented schema.

    The message carries a JSON-pointer-style location of the offending field.
    """


class MissingFile(ShiftLensError):
    """Manifest references paths that do not exist on disk."""


# --- CLI ---------------------------------------------------------------------

class NoImagesFound(ShiftLensError):
    """Input directory contains no decodable .jpg/.jpeg/.png files."""
