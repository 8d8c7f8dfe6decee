"""Binary tensor interchange and the run manifest.

Tensor file layout (all multi-byte fields little-endian)::

    offset  size       field
    0       4          magic  b"STNS"
    4       2          version, uint16 (currently 1)
    6       1          dtype, uint8 (1 = IEEE-754 float32 little-endian)
    7       1          ndim, uint8 (1 or 2)
    8       4 * ndim   dims, uint32 each
    ...     4 * prod   payload, row-major float32 values

The layout is the wire contract between this package and any external
encoder that produces embeddings or attention maps for it.

The run manifest is a JSON document binding image keys to augmented image
files and (optionally) tensor files::

    {
      "schema_version": 1,
      "global_seed": 1234,
      "images": [
        {
          "image_key": "photos__cat",
          "original": {"image_path": "original/photos__cat.png",
                       "embedding_path": null, "attention_path": null},
          "augmentations": {
            "GaussNoise": {"image_path": "GaussNoise/photos__cat.png",
                           "embedding_path": null, "attention_path": null},
            ...
          }
        }
      ]
    }

Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import json
import os
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    InvalidDims,
    MissingFile,
    SchemaError,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)

MAGIC = b"STNS"
VERSION = 1
DTYPE_F32 = 1


def write_tensor(path: str | Path, values: np.ndarray) -> None:
    """Write a 1-D or 2-D float array in the tensor file layout."""
    values = np.asarray(values)
    if values.ndim not in (1, 2):
        raise InvalidDims(f"only 1-D and 2-D tensors are supported, got ndim={values.ndim}")
    dims = values.shape
    header = MAGIC + struct.pack("<HBB", VERSION, DTYPE_F32, values.ndim)
    header += struct.pack(f"<{values.ndim}I", *dims)
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path: str | Path) -> tuple[np.ndarray, tuple[int, ...]]:
    """Read a tensor file, returning (values, dims).

    Values come back as float32 in the declared shape. Non-finite payloads
    are legal but emit a RuntimeWarning.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a tensor file (bad magic)")
    version, dtype, ndim = struct.unpack("<HBB", raw[4:8])
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version} not supported")
    if dtype != DTYPE_F32:
        raise UnsupportedDtype(f"{path}: dtype code {dtype} not supported")
    if ndim not in (1, 2):
        raise InvalidDims(f"{path}: ndim {ndim} not supported")
    dim_end = 8 + 4 * ndim
    if len(raw) < dim_end:
        raise TruncatedPayload(f"{path}: header truncated")
    dims = struct.unpack(f"<{ndim}I", raw[8:dim_end])
    expected = 4 * int(np.prod(dims))
    payload = raw[dim_end:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, dims {dims} require {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(values)):
        warnings.warn(f"{path}: tensor contains NaN/Inf values", RuntimeWarning)
    return values, dims


# --- run manifest -------------------------------------------------------------


@dataclass
class TensorRefs:
    """One image file plus its optional embedding/attention tensors."""

    image_path: str
    embedding_path: str | None = None
    attention_path: str | None = None


@dataclass
class ImageEntry:
    image_key: str
    original: TensorRefs
    augmentations: dict[str, TensorRefs] = field(default_factory=dict)


@dataclass
class RunManifest:
    schema_version: int
    global_seed: int
    images: list[ImageEntry] = field(default_factory=list)
    base_dir: Path = field(default_factory=Path)

    @property
    def augmentation_names(self) -> list[str]:
        if not self.images:
            return []
        return sorted(self.images[0].augmentations)

    def resolve(self, rel_path: str) -> Path:
        """Resolve a manifest-relative path against the manifest directory."""
        p = Path(rel_path)
        return p if p.is_absolute() else self.base_dir / p


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"{where}/{key}: missing required field")
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}/{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_refs(obj, where: str) -> TensorRefs:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected object")
    image_path = _require(obj, "image_path", str, where)
    refs = TensorRefs(image_path=image_path)
    for name in ("embedding_path", "attention_path"):
        value = obj.get(name)
        if value is not None and not isinstance(value, str):
            raise SchemaError(f"{where}/{name}: expected string or null")
        setattr(refs, name, value)
    return refs


def load_manifest(path: str | Path, check_files: bool = False) -> RunManifest:
    """Load and validate a manifest JSON file.

    With ``check_files`` every referenced path must exist; absent ones are
    reported together in a single MissingFile error.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"/: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError("/: expected a JSON object")

    schema_version = _require(doc, "schema_version", int, "")
    if schema_version != 1:
        raise SchemaError(f"/schema_version: unsupported version {schema_version}")
    global_seed = _require(doc, "global_seed", int, "")
    images_raw = _require(doc, "images", list, "")

    manifest = RunManifest(
        schema_version=schema_version, global_seed=global_seed, base_dir=path.parent
    )
    seen_keys: set[str] = set()
    aug_names: set[str] | None = None
    for i, entry in enumerate(images_raw):
        where = f"/images/{i}"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected object")
        key = _require(entry, "image_key", str, where)
        if key in seen_keys:
            raise SchemaError(f"{where}/image_key: duplicate image key {key!r}")
        seen_keys.add(key)
        original = _parse_refs(_require(entry, "original", dict, where), f"{where}/original")
        augs_raw = _require(entry, "augmentations", dict, where)
        augs = {
            name: _parse_refs(ref, f"{where}/augmentations/{name}")
            for name, ref in augs_raw.items()
        }
        if aug_names is None:
            aug_names = set(augs)
        elif set(augs) != aug_names:
            raise SchemaError(
                f"{where}/augmentations: augmentation set differs from first entry"
            )
        manifest.images.append(ImageEntry(image_key=key, original=original, augmentations=augs))

    if check_files:
        missing = [
            str(manifest.resolve(p))
            for p in iter_manifest_paths(manifest)
            if not manifest.resolve(p).exists()
        ]
        if missing:
            raise MissingFile("manifest references absent files: " + ", ".join(missing))
    return manifest


def iter_manifest_paths(manifest: RunManifest):
    """Yield every path string referenced by the manifest."""
    for entry in manifest.images:
        refs = [entry.original, *entry.augmentations.values()]
        for ref in refs:
            yield ref.image_path
            if ref.embedding_path is not None:
                yield ref.embedding_path
            if ref.attention_path is not None:
                yield ref.attention_path


def _refs_to_json(refs: TensorRefs) -> dict:
    return {
        "image_path": refs.image_path,
        "embedding_path": refs.embedding_path,
        "attention_path": refs.attention_path,
    }


def save_manifest(manifest: RunManifest, path: str | Path) -> None:
    """Write the manifest as JSON, atomically (write-temp-rename)."""
    doc = {
        "schema_version": manifest.schema_version,
        "global_seed": manifest.global_seed,
        "images": [
            {
                "image_key": entry.image_key,
                "original": _refs_to_json(entry.original),
                "augmentations": {
                    name: _refs_to_json(ref)
                    for name, ref in sorted(entry.augmentations.items())
                },
            }
            for entry in manifest.images
        ],
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)
