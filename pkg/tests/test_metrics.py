import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shiftlens.errors import DimMismatch, ShapeMismatch, ZeroVector
from shiftlens.metrics import (
    Bundle,
    attention_similarity,
    compute_record,
    cosine_similarity,
    detail_similarity,
    edge_similarity,
    l2_distance,
    patch_similarity,
)

vectors = arrays(
    np.float64, st.integers(2, 8), elements=st.floats(-100, 100, allow_nan=False)
)


class TestCosine:
    def test_self_similarity(self, rng):
        u = rng.standard_normal(16)
        assert cosine_similarity(u, u) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_45_degrees(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            1 / np.sqrt(2), abs=1e-12
        )

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            cosine_similarity([1.0], [1.0, 2.0])

    @given(vectors, st.floats(0.001, 1000.0))
    def test_scale_invariance(self, u, c):
        if np.linalg.norm(u) == 0 or not np.isfinite(np.linalg.norm(c * u)):
            return
        v = np.roll(u, 1) + 1.0
        if np.linalg.norm(v) == 0:
            return
        assert cosine_similarity(c * u, v) == pytest.approx(
            cosine_similarity(u, v), abs=1e-9
        )

    def test_bounded(self, rng):
        for _ in range(50):
            u, v = rng.standard_normal((2, 5))
            assert -1.0 <= cosine_similarity(u, v) <= 1.0


class TestL2:
    def test_identity(self, rng):
        u = rng.standard_normal(8)
        assert l2_distance(u, u) == 0.0

    def test_3_4_5(self):
        assert l2_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_symmetry(self, rng):
        for _ in range(20):
            u, v = rng.standard_normal((2, 6))
            assert l2_distance(u, v) == l2_distance(v, u)


class TestAttentionSimilarity:
    def test_identical(self, rng):
        a = rng.uniform(0, 1, (7, 7))
        assert attention_similarity(a, a) == 1.0

    def test_zero_vs_one(self):
        assert attention_similarity(np.zeros((3, 5)), np.ones((3, 5))) == 0.5

    def test_mse_three(self):
        # squared differences 1, 4, 4 -> MSE exactly 3
        assert attention_similarity(np.zeros((1, 3)), np.array([[1.0, 2.0, 2.0]])) == 0.25

    def test_strictly_decreasing_in_mse(self, rng):
        a = rng.uniform(0, 1, (4, 4))
        values = [attention_similarity(a, a + t) for t in (0.0, 0.5, 1.0, 2.0)]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            attention_similarity(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_symmetry_and_bounds(self, rng):
        a, b = rng.uniform(0, 2, (2, 5, 5))
        s = attention_similarity(a, b)
        assert s == attention_similarity(b, a)
        assert 0.0 < s <= 1.0


class TestPatchSimilarity:
    def test_identical(self, rng):
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        assert patch_similarity(img, img) == 1.0

    def test_black_vs_white(self):
        black = np.zeros((8, 8, 3), dtype=np.uint8)
        white = np.full((8, 8, 3), 255, dtype=np.uint8)
        assert patch_similarity(black, white) == 0.5

    def test_single_differing_patch(self):
        black = np.zeros((8, 8, 3), dtype=np.uint8)
        other = black.copy()
        other[:2, :2] = 255  # patch (0, 0) of the 4x4 grid
        assert patch_similarity(black, other) == (15 + 0.5) / 16

    def test_symmetry(self, rng):
        i1 = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        i2 = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        assert patch_similarity(i1, i2) == patch_similarity(i2, i1)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            patch_similarity(np.zeros((8, 8, 3), np.uint8), np.zeros((8, 12, 3), np.uint8))


class TestEdgeSimilarity:
    def test_identical(self, rng):
        img = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
        assert edge_similarity(img, img) == 1.0

    def test_constant_offset(self, rng):
        img = rng.integers(20, 200, (10, 10, 3), dtype=np.uint8)
        shifted = (img.astype(np.int16) + 20).astype(np.uint8)  # no clipping
        assert edge_similarity(img, shifted) == pytest.approx(1.0, abs=1e-12)

    def test_opposite_ideal_maps(self):
        # i1: single sharp edge -> normalized map has a thin band of ones;
        # i2: constant -> all-zero map. Mean |difference| equals the band mass.
        i1 = np.zeros((4, 4, 3), dtype=np.uint8)
        i1[:, 2:] = 255
        i2 = np.zeros((4, 4, 3), dtype=np.uint8)
        expected = 1.0 - np.mean(np.abs(_ideal_edge(i1)))
        assert edge_similarity(i1, i2) == pytest.approx(expected, abs=1e-12)

    def test_symmetry_and_bounds(self, rng):
        i1 = rng.integers(0, 256, (9, 9, 3), dtype=np.uint8)
        i2 = rng.integers(0, 256, (9, 9, 3), dtype=np.uint8)
        s = edge_similarity(i1, i2)
        assert s == edge_similarity(i2, i1)
        assert 0.0 <= s <= 1.0


def _ideal_edge(img):
    from shiftlens.imagecore import edge_map, to_grayscale, u8_to_float

    return edge_map(to_grayscale(u8_to_float(img)))


class TestDetailSimilarity:
    def test_identical_nonuniform(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        assert detail_similarity(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_sigma_ratio_e(self):
        # alternating rows a +/- d have population sigma exactly d; float
        # images in 8-bit units make the ratio exactly e
        base = np.full((8, 8, 3), 100.0)
        base[::2] += 1.0
        base[1::2] -= 1.0
        aug = np.full((8, 8, 3), 100.0)
        aug[::2] += np.e
        aug[1::2] -= np.e
        assert detail_similarity(base, aug) == pytest.approx(np.exp(-1), abs=1e-12)

    def test_constant_pair_undefined(self):
        c = np.full((8, 8, 3), 77, dtype=np.uint8)
        assert detail_similarity(c, c) is None

    def test_uniform_patches_excluded(self, rng):
        # half the image constant on both sides: those patches drop out
        i1 = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        i2 = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        i1[:4], i2[:4] = 10, 10
        s_partial = detail_similarity(i1, i2)
        assert s_partial is not None and 0.0 < s_partial <= 1.0

    def test_swap_invariance(self, rng):
        i1 = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        i2 = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        assert detail_similarity(i1, i2) == pytest.approx(
            detail_similarity(i2, i1), abs=1e-12
        )


class TestComputeRecord:
    def test_identity_bundles(self, rng):
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        emb = rng.standard_normal(32)
        attn = rng.uniform(0, 1, (7, 7))
        bundle = Bundle(image=img, embedding=emb, attention=attn)
        rec = compute_record("k", "GaussNoise", bundle, bundle)
        assert rec.cosine_sim == pytest.approx(1.0, abs=1e-12)
        assert rec.l2_dist == 0.0
        assert rec.attn_sim == 1.0
        assert rec.patch_sim == 1.0
        assert rec.edge_sim == 1.0
        assert rec.detail_sim == pytest.approx(1.0, abs=1e-12)

    def test_missing_tensors_yield_none(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        rec = compute_record("k", "GaussNoise", Bundle(image=img), Bundle(image=img))
        assert rec.cosine_sim is None and rec.l2_dist is None and rec.attn_sim is None
        assert rec.patch_sim == 1.0

    def test_errors_carry_image_key(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        b1 = Bundle(image=img, embedding=np.ones(4))
        b2 = Bundle(image=img, embedding=np.ones(5))
        with pytest.raises(DimMismatch, match="somekey"):
            compute_record("somekey", "GaussNoise", b1, b2)
