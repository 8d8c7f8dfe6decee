import numpy as np
import pytest


def make_test_image(rng: np.random.Generator, h: int = 64, w: int = 64) -> np.ndarray:
    """Structured random RGB image: gradient background plus random blocks.

    Structure (rather than pure noise) keeps edge/detail metrics and the
    synthetic embedder meaningfully varied across images.
    """
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    base = np.stack(
        [
            0.2 + 0.6 * xx,
            0.2 + 0.6 * yy,
            0.5 + 0.4 * np.sin(6.0 * (xx + yy) + rng.uniform(0, 6.28)),
        ],
        axis=-1,
    )
    for _ in range(rng.integers(2, 6)):
        bh, bw = int(rng.integers(h // 8, h // 2)), int(rng.integers(w // 8, w // 2))
        r, c = int(rng.integers(0, h - bh)), int(rng.integers(0, w - bw))
        base[r : r + bh, c : c + bw] = rng.uniform(0, 1, 3)
    return (np.clip(base, 0, 1) * 255).astype(np.uint8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
