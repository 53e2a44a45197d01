"""8-bit RGB image buffers and the handful of raster utilities the pipeline needs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class ImageBuffer:
    """An RGB raster: height x width x 3 uint8 samples in row-major order."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 3

    def to_float(self) -> np.ndarray:
        """Samples as float64 in [0, 1]."""
        return self.data.astype(np.float64) / 255.0

    @classmethod
    def from_float(cls, values: np.ndarray) -> "ImageBuffer":
        """Clip to [0, 1], re-quantize with round(x * 255)."""
        clipped = np.clip(values, 0.0, 1.0)
        return cls(np.round(clipped * 255.0).astype(np.uint8))

    @classmethod
    def load(cls, path: str | Path) -> "ImageBuffer":
        with Image.open(path) as im:
            return cls(np.asarray(im.convert("RGB")))

    def save(self, path: str | Path) -> None:
        """Write to disk; format chosen by suffix (.png lossless, .jpg baseline)."""
        Image.fromarray(self.data).save(path)

    def __eq__(self, other) -> bool:
        return isinstance(other, ImageBuffer) and np.array_equal(self.data, other.data)


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB over 8-bit samples (inf for identical images).

    Internal test utility only; PSNR is not a reportable method here.
    """
    if a.data.shape != b.data.shape:
        raise ValueError("images must share dimensions")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = np.mean(diff * diff)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)
