from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

REPO_ROOT = Path(__file__).resolve().parent.parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def sample_images_dir(tmp_path_factory) -> Path:
    """Five deterministic 96x96 RGB images (large enough for every tested tap)."""
    d = tmp_path_factory.mktemp("samples")
    rng = np.random.default_rng(31)
    yy, xx = np.mgrid[0:96, 0:96]
    arrays = [
        np.stack([(xx * 255 // 95), (yy * 255 // 95), ((xx + yy) * 255 // 190)], -1),
        (((yy // 12 + xx // 12) % 2) * 255)[..., None].repeat(3, axis=2),
        rng.integers(0, 256, size=(96, 96, 3)),
        np.kron(rng.integers(40, 220, size=(12, 12, 3)), np.ones((8, 8, 1))),
        np.minimum(255, (np.sin(xx / 7.0) * 127 + 128)[..., None].repeat(3, axis=2)),
    ]
    for i, arr in enumerate(arrays):
        Image.fromarray(arr.astype(np.uint8)).save(d / f"sample{i}.png")
    return d
