import json
import struct

import numpy as np
import pytest

from shiftlens.errors import (
    BadMagic,
    InvalidDims,
    MissingFile,
    SchemaError,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)
from shiftlens.tensorio import (
    ImageEntry,
    RunManifest,
    TensorRefs,
    load_manifest,
    read_tensor,
    save_manifest,
    write_tensor,
)


class TestTensorFile:
    def test_single_value_vector_is_16_bytes(self, tmp_path):
        path = tmp_path / "v.stns"
        write_tensor(path, np.array([1.0]))
        assert path.stat().st_size == 16

    def test_7x7_map_is_212_bytes(self, tmp_path):
        # 8-byte fixed header + 2 dims x 4 + 49 values x 4
        path = tmp_path / "m.stns"
        write_tensor(path, np.zeros((7, 7)))
        assert path.stat().st_size == 4 + 2 + 1 + 1 + 2 * 4 + 49 * 4

    def test_exact_bytes(self, tmp_path):
        path = tmp_path / "v.stns"
        write_tensor(path, np.array([1.0], dtype=np.float32))
        expected = b"STNS" + struct.pack("<HBB", 1, 1, 1) + struct.pack("<I", 1)
        expected += struct.pack("<f", 1.0)
        assert path.read_bytes() == expected

    @pytest.mark.parametrize("shape", [(3,), (512,), (7, 7), (1, 5)])
    def test_roundtrip_bit_identical(self, tmp_path, rng, shape):
        values = rng.standard_normal(shape).astype(np.float32)
        path = tmp_path / "t.stns"
        write_tensor(path, values)
        back, dims = read_tensor(path)
        assert dims == shape
        np.testing.assert_array_equal(back, values)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.stns"
        path.write_bytes(b"XXXX" + b"\x00" * 12)
        with pytest.raises(BadMagic):
            read_tensor(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "x.stns"
        path.write_bytes(b"STNS" + struct.pack("<HBB", 9, 1, 1) + struct.pack("<I", 1) + b"\x00" * 4)
        with pytest.raises(UnsupportedVersion):
            read_tensor(path)

    def test_unsupported_dtype(self, tmp_path):
        path = tmp_path / "x.stns"
        path.write_bytes(b"STNS" + struct.pack("<HBB", 1, 7, 1) + struct.pack("<I", 1) + b"\x00" * 4)
        with pytest.raises(UnsupportedDtype):
            read_tensor(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "x.stns"
        write_tensor(path, np.arange(4.0))
        path.write_bytes(path.read_bytes()[:-2])
        with pytest.raises(TruncatedPayload):
            read_tensor(path)

    def test_oversized_payload_rejected(self, tmp_path):
        path = tmp_path / "x.stns"
        write_tensor(path, np.arange(4.0))
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(TruncatedPayload):
            read_tensor(path)

    def test_3d_write_rejected(self, tmp_path):
        with pytest.raises(InvalidDims):
            write_tensor(tmp_path / "x.stns", np.zeros((2, 2, 2)))

    def test_nan_payload_warns(self, tmp_path):
        path = tmp_path / "x.stns"
        write_tensor(path, np.array([np.nan, 1.0]))
        with pytest.warns(RuntimeWarning):
            read_tensor(path)


def _manifest_doc(tmp_path, augs=("GaussNoise", "HorizontalFlip")):
    (tmp_path / "original").mkdir(exist_ok=True)
    doc = {"schema_version": 1, "global_seed": 7, "images": []}
    for key in ("a", "b"):
        (tmp_path / "original" / f"{key}.png").write_bytes(b"x")
        entry = {
            "image_key": key,
            "original": {
                "image_path": f"original/{key}.png",
                "embedding_path": None,
                "attention_path": None,
            },
            "augmentations": {},
        }
        for aug in augs:
            (tmp_path / aug).mkdir(exist_ok=True)
            (tmp_path / aug / f"{key}.png").write_bytes(b"x")
            entry["augmentations"][aug] = {"image_path": f"{aug}/{key}.png"}
        doc["images"].append(entry)
    return doc


class TestManifest:
    def test_load_valid(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(_manifest_doc(tmp_path)))
        manifest = load_manifest(path, check_files=True)
        assert [e.image_key for e in manifest.images] == ["a", "b"]
        assert manifest.augmentation_names == ["GaussNoise", "HorizontalFlip"]
        assert manifest.images[0].original.embedding_path is None

    def test_save_load_roundtrip(self, tmp_path):
        manifest = RunManifest(
            schema_version=1,
            global_seed=3,
            images=[
                ImageEntry(
                    image_key="k",
                    original=TensorRefs(image_path="original/k.png", embedding_path="e.stns"),
                    augmentations={"GaussNoise": TensorRefs(image_path="GaussNoise/k.png")},
                )
            ],
        )
        path = tmp_path / "manifest.json"
        save_manifest(manifest, path)
        back = load_manifest(path)
        assert back.global_seed == 3
        assert back.images[0].original.embedding_path == "e.stns"
        assert back.images[0].augmentations["GaussNoise"].image_path == "GaussNoise/k.png"

    def test_duplicate_keys_rejected(self, tmp_path):
        doc = _manifest_doc(tmp_path)
        doc["images"][1]["image_key"] = "a"
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="duplicate"):
            load_manifest(path)

    def test_inconsistent_augmentation_sets_rejected(self, tmp_path):
        doc = _manifest_doc(tmp_path)
        del doc["images"][1]["augmentations"]["GaussNoise"]
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="/images/1/augmentations"):
            load_manifest(path)

    def test_missing_field_has_json_pointer(self, tmp_path):
        doc = _manifest_doc(tmp_path)
        del doc["images"][0]["original"]["image_path"]
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="/images/0/original/image_path"):
            load_manifest(path)

    def test_missing_files_listed(self, tmp_path):
        doc = _manifest_doc(tmp_path)
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        (tmp_path / "GaussNoise" / "a.png").unlink()
        with pytest.raises(MissingFile, match="GaussNoise"):
            load_manifest(path, check_files=True)
        load_manifest(path, check_files=False)

    def test_not_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{nope")
        with pytest.raises(SchemaError):
            load_manifest(path)
