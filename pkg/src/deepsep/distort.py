"""Synthetic distortion ladder: AWGN, Gaussian blur and JPEG at nine severities each.

All three distortions operate in the real [0, 1] pixel domain and re-quantize to
8 bits afterwards, so noise/blur parameters are on the unit scale. Every output
is a pure function of (input, parameters, seed); corpus generation derives one
RNG stream per image so results do not depend on generation order.
"""

from __future__ import annotations

import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from deepsep.data import Manifest, ManifestRow, Polarity
from deepsep.image import ImageBuffer

KIND_AWGN = "awgn"
KIND_GBLUR = "gblur"
KIND_JPEG = "jpeg"
KINDS = (KIND_AWGN, KIND_GBLUR, KIND_JPEG)

LEVEL_COUNT = 9


@dataclass(frozen=True)
class DistortionSpec:
    """One point on the ladder: a distortion kind, its 1..9 severity index, and the parameter."""

    kind: str
    level_index: int
    param: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        if not 1 <= self.level_index <= LEVEL_COUNT:
            raise ValueError(f"level_index must be 1..{LEVEL_COUNT}, got {self.level_index}")
        if self.kind == KIND_JPEG:
            if not (float(self.param).is_integer() and 1 <= self.param <= 100):
                raise ValueError(f"JPEG quality must be an integer in [1, 100], got {self.param}")
        elif self.param <= 0:
            raise ValueError(f"{self.kind} parameter must be > 0, got {self.param}")


@dataclass(frozen=True)
class DistortionLadder:
    """Severity parameters per distortion kind, mildest (index 1) to harshest (index 9)."""

    awgn_sigmas: tuple
    gblur_sigmas: tuple
    jpeg_qualities: tuple

    def __post_init__(self):
        for name, vals in (("awgn_sigmas", self.awgn_sigmas), ("gblur_sigmas", self.gblur_sigmas),
                           ("jpeg_qualities", self.jpeg_qualities)):
            if len(vals) != LEVEL_COUNT:
                raise ValueError(f"{name} must have {LEVEL_COUNT} entries")
        if not all(a < b for a, b in zip(self.awgn_sigmas, self.awgn_sigmas[1:])):
            raise ValueError("awgn_sigmas must be strictly increasing")
        if not all(a < b for a, b in zip(self.gblur_sigmas, self.gblur_sigmas[1:])):
            raise ValueError("gblur_sigmas must be strictly increasing")
        if not all(a > b for a, b in zip(self.jpeg_qualities, self.jpeg_qualities[1:])):
            raise ValueError("jpeg_qualities must be strictly decreasing")
        if any(not (1 <= q <= 100 and float(q).is_integer()) for q in self.jpeg_qualities):
            raise ValueError("jpeg_qualities must be integers in [1, 100]")
        if self.awgn_sigmas[0] <= 0 or self.gblur_sigmas[0] <= 0:
            raise ValueError("noise/blur sigmas must be positive")

    def spec_for(self, kind: str, level_index: int) -> DistortionSpec:
        if kind == KIND_AWGN:
            param = self.awgn_sigmas[level_index - 1]
        elif kind == KIND_GBLUR:
            param = self.gblur_sigmas[level_index - 1]
        elif kind == KIND_JPEG:
            param = self.jpeg_qualities[level_index - 1]
        else:
            raise ValueError(f"unknown distortion kind {kind!r}")
        return DistortionSpec(kind=kind, level_index=level_index, param=param)

    @classmethod
    def from_json(cls, path: str | Path) -> "DistortionLadder":
        raw = json.loads(Path(path).read_text())
        return cls(
            awgn_sigmas=tuple(float(v) for v in raw["awgn_sigmas"]),
            gblur_sigmas=tuple(float(v) for v in raw["gblur_sigmas"]),
            jpeg_qualities=tuple(int(v) for v in raw["jpeg_qualities"]),
        )


DEFAULT_LADDER = DistortionLadder(
    awgn_sigmas=(0.03, 0.06, 0.09, 0.13, 0.18, 0.24, 0.31, 0.50, 1.89),
    gblur_sigmas=(0.62, 0.82, 0.95, 1.13, 1.42, 1.65, 2.17, 3.54, 13.00),
    jpeg_qualities=(80, 60, 45, 30, 20, 15, 10, 5, 2),
)


def apply_awgn(img: ImageBuffer, sigma_n: float, seed: int) -> ImageBuffer:
    """Add i.i.d. zero-mean Gaussian noise of std sigma_n (unit pixel scale) per sample."""
    if sigma_n < 0:
        raise ValueError("sigma_n must be >= 0")
    if sigma_n == 0:
        return ImageBuffer(img.data.copy())
    rng = np.random.default_rng(seed)
    noisy = img.to_float() + rng.standard_normal(img.data.shape) * sigma_n
    return ImageBuffer.from_float(noisy)


def apply_gblur(img: ImageBuffer, sigma_g: float) -> ImageBuffer:
    """Blur each channel with a sampled Gaussian, radius floor(4*sigma+0.5), reflect borders."""
    if sigma_g <= 0:
        raise ValueError("sigma_g must be > 0")
    x = img.to_float()
    # scipy's default truncate=4.0 gives exactly the radius above; mode="reflect"
    # duplicates the edge sample, matching the documented default semantics.
    out = np.empty_like(x)
    for c in range(3):
        out[..., c] = ndimage.gaussian_filter(x[..., c], sigma=sigma_g, mode="reflect", truncate=4.0)
    return ImageBuffer.from_float(out)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """The sampled, unit-sum 1-D kernel apply_gblur convolves with (for oracle checks)."""
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def encode_jpeg(img: ImageBuffer, q: int) -> bytes:
    """Baseline JPEG stream at IJG quality q with 4:2:0 chroma subsampling."""
    if not 1 <= q <= 100:
        raise ValueError("JPEG quality must be in [1, 100]")
    buf = io.BytesIO()
    Image.fromarray(img.data).save(buf, format="JPEG", quality=int(q), subsampling=2)
    return buf.getvalue()


def apply_jpeg(img: ImageBuffer, q: int) -> ImageBuffer:
    """Encode to baseline JPEG at quality q and decode back."""
    data = encode_jpeg(img, q)
    with Image.open(io.BytesIO(data)) as im:
        return ImageBuffer(np.asarray(im.convert("RGB")))


def apply(img: ImageBuffer, spec: DistortionSpec, seed: int = 0) -> ImageBuffer:
    if spec.kind == KIND_AWGN:
        return apply_awgn(img, spec.param, seed)
    if spec.kind == KIND_GBLUR:
        return apply_gblur(img, spec.param)
    return apply_jpeg(img, int(spec.param))


def stream_seed(master_seed: int, ref_id: str, kind: str, level_index: int) -> int:
    """Per-image RNG stream seed: master seed XOR a stable hash of (ref, kind, level)."""
    digest = hashlib.sha256(f"{ref_id}|{kind}|{level_index}".encode("utf-8")).digest()
    h = int.from_bytes(digest[:8], "little")
    return (int(master_seed) ^ h) & 0xFFFFFFFFFFFFFFFF


def distorted_image_id(ref_id: str, kind: str, level_index: int) -> str:
    return f"{ref_id}_{kind}_{level_index}"


def generate_corpus(
    references: Sequence[tuple[str, ImageBuffer]],
    out_dir: str | Path,
    seed: int,
    ladder: DistortionLadder = DEFAULT_LADDER,
    database: str = "synthetic",
    threads: int = 1,
) -> Manifest:
    """Emit the full |refs| x 3 kinds x 9 levels corpus plus its manifest.

    AWGN/GBlur outputs are stored losslessly as PNG; JPEG rows store the encoded
    stream itself. References are copied into the corpus as PNG so the manifest
    is self-contained. Severity level doubles as the ground-truth score
    (higher is worse). Returns the manifest; also writes it to manifest.csv.
    """
    if not references:
        raise ValueError("references must be non-empty")
    ids = [rid for rid, _ in references]
    if len(set(ids)) != len(ids):
        dupes = sorted({rid for rid in ids if ids.count(rid) > 1})
        raise ValueError(f"duplicate reference ids: {dupes}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows: list[ManifestRow] = []
    for rid, img in references:
        path = out_dir / f"{rid}.png"
        img.save(path)
        rows.append(ManifestRow(
            image_path=path.name, image_id=rid, reference_id=rid,
            kinds=(), levels=(), score=None,
            polarity=Polarity.HIGHER_IS_WORSE, database=database,
        ))

    jobs = [
        (rid, img, kind, level)
        for rid, img in references
        for kind in KINDS
        for level in range(1, LEVEL_COUNT + 1)
    ]

    def make_one(job) -> ManifestRow:
        rid, img, kind, level = job
        spec = ladder.spec_for(kind, level)
        image_id = distorted_image_id(rid, kind, level)
        if kind == KIND_JPEG:
            path = out_dir / f"{image_id}.jpg"
            path.write_bytes(encode_jpeg(img, int(spec.param)))
        else:
            path = out_dir / f"{image_id}.png"
            distorted = apply(img, spec, stream_seed(seed, rid, kind, level))
            distorted.save(path)
        return ManifestRow(
            image_path=path.name, image_id=image_id, reference_id=rid,
            kinds=(kind,), levels=(level,), score=float(level),
            polarity=Polarity.HIGHER_IS_WORSE, database=database,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows.extend(pool.map(make_one, jobs))
    else:
        rows.extend(make_one(j) for j in jobs)

    manifest = Manifest(rows)
    manifest.save(out_dir / "manifest.csv")
    return manifest
