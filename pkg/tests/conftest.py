from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from deepsep.image import ImageBuffer
from deepsep.separability import ClusteredSet

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def random_clustered_set(rng: np.random.Generator, max_k: int = 4,
                         max_dim: int = 6, max_per_cluster: int = 12) -> ClusteredSet:
    """A random non-degenerate labeled point set."""
    k = int(rng.integers(2, max_k + 1))
    d = int(rng.integers(1, max_dim + 1))
    vectors = []
    labels = []
    for c in range(k):
        n_c = int(rng.integers(2, max_per_cluster + 1))
        center = rng.normal(scale=5.0, size=d)
        pts = center + rng.normal(scale=1.0, size=(n_c, d))
        vectors.append(pts)
        labels.extend([c] * n_c)
    return ClusteredSet(vectors=np.vstack(vectors), labels=np.array(labels),
                        label_names=tuple(range(k)))


def checker_image(h: int = 64, w: int = 64, cell: int = 8) -> ImageBuffer:
    """A deterministic high-contrast test raster."""
    yy, xx = np.mgrid[0:h, 0:w]
    base = (((yy // cell) + (xx // cell)) % 2) * 255
    arr = np.stack([base, np.roll(base, cell // 2, 0), np.roll(base, cell // 2, 1)], axis=-1)
    return ImageBuffer(arr.astype(np.uint8))


def gradient_image(h: int = 48, w: int = 64) -> ImageBuffer:
    yy, xx = np.mgrid[0:h, 0:w]
    r = (255 * xx / max(w - 1, 1)).astype(np.uint8)
    g = (255 * yy / max(h - 1, 1)).astype(np.uint8)
    b = ((r.astype(int) + g.astype(int)) // 2).astype(np.uint8)
    return ImageBuffer(np.stack([r, g, b], axis=-1))
