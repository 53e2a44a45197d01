"""Per-layer pooled deep-feature vectors and the layer registry.

Images enter a network at their original size (no resizing, so artifacts stay
visible); the activation block at a named tap is spatially averaged into a
single 1 x c_l descriptor per image. The registry of valid taps per network is
a JSON file shared verbatim with the graph exporter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from deepsep.data import Manifest
from deepsep.dump import read_dump, write_dump
from deepsep.errors import MissingVector, TapMismatch, UnknownLayer
from deepsep.separability import ClusteredSet


@dataclass(frozen=True)
class LayerTap:
    """A named activation point: network id, layer name, channel count, min input side."""

    network: str
    layer_name: str
    channels: int
    min_input: int = 1


class LayerRegistry:
    """The fixed tap registry; layer names and channel counts per supported network."""

    def __init__(self, spec: dict):
        self.version = spec["version"]
        self.preprocessing = spec["preprocessing"]
        self._taps = {}
        self._order = {}
        for network, body in spec["networks"].items():
            names = []
            for entry in body["layers"]:
                tap = LayerTap(network=network, layer_name=entry["name"],
                               channels=int(entry["channels"]), min_input=int(entry["min_input"]))
                self._taps[(network, tap.layer_name)] = tap
                names.append(tap.layer_name)
            self._order[network] = tuple(names)

    @classmethod
    def default(cls) -> "LayerRegistry":
        text = resources.files("deepsep").joinpath("resources/layers.json").read_text()
        return cls(json.loads(text))

    @classmethod
    def from_file(cls, path: str | Path) -> "LayerRegistry":
        return cls(json.loads(Path(path).read_text()))

    @property
    def networks(self) -> tuple:
        return tuple(self._order)

    def layer_names(self, network: str) -> tuple:
        if network not in self._order:
            raise UnknownLayer(f"unknown network {network!r}; known: {sorted(self._order)}")
        return self._order[network]

    def tap(self, network: str, layer_name: str) -> LayerTap:
        try:
            return self._taps[(network, layer_name)]
        except KeyError:
            if network not in self._order:
                raise UnknownLayer(f"unknown network {network!r}") from None
            raise UnknownLayer(
                f"no layer {layer_name!r} in {network}; known: {list(self._order[network])}") from None

    def taps(self, network: str) -> tuple:
        return tuple(self.tap(network, name) for name in self.layer_names(network))


_default_registry: Optional[LayerRegistry] = None


def registry() -> LayerRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = LayerRegistry.default()
    return _default_registry


@dataclass(frozen=True)
class FeatureMap:
    """One tap's activation block for one image: (h_l, w_l, c_l) float32, finite."""

    tap: LayerTap
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3:
            raise ValueError(f"feature map must be (h, w, c), got shape {v.shape}")
        if v.shape[2] != self.tap.channels:
            raise ValueError(
                f"feature map has {v.shape[2]} channels, tap {self.tap.layer_name} expects {self.tap.channels}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("feature map spatial dims must be >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature map contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PooledVector:
    """The 1 x c_l spatial-mean descriptor of one image at one tap."""

    tap: LayerTap
    image_id: str
    values: np.ndarray
    distortion_kind: Optional[str] = None
    level_index: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.shape[0] != self.tap.channels:
            raise ValueError(
                f"pooled vector length {v.shape} does not match tap channels {self.tap.channels}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pooled vector contains non-finite values")
        object.__setattr__(self, "values", v)


def pool_spatial(fmap: FeatureMap) -> np.ndarray:
    """Mean over both spatial dimensions; accumulates in float64, narrows to float32."""
    return fmap.values.astype(np.float64).mean(axis=(0, 1)).astype(np.float32)


def pool_to_vector(fmap: FeatureMap, image_id: str,
                   distortion_kind: Optional[str] = None,
                   level_index: Optional[int] = None) -> PooledVector:
    return PooledVector(tap=fmap.tap, image_id=image_id, values=pool_spatial(fmap),
                        distortion_kind=distortion_kind, level_index=level_index)


def subtract_reference(distorted: PooledVector, reference: PooledVector) -> PooledVector:
    """Element-wise distorted - reference; removes the shared image content signal."""
    if distorted.tap != reference.tap:
        raise TapMismatch(
            f"cannot subtract across taps {distorted.tap} vs {reference.tap}")
    return replace(distorted, values=distorted.values - reference.values)


class PooledSet:
    """All pooled vectors of one (network, layer) over a corpus, with provenance labels."""

    def __init__(self, network: str, layer: str, channels: int, preprocessing: dict,
                 image_ids: Sequence[str], kinds: Sequence, levels: Sequence,
                 matrix: np.ndarray):
        if not (len(image_ids) == len(kinds) == len(levels) == matrix.shape[0]):
            raise ValueError("record metadata and matrix row counts differ")
        if matrix.ndim != 2 or matrix.shape[1] != channels:
            raise ValueError(f"matrix must be (n, {channels}), got {matrix.shape}")
        self.network = network
        self.layer = layer
        self.channels = channels
        self.preprocessing = preprocessing
        self.image_ids = list(image_ids)
        self.kinds = list(kinds)
        self.levels = list(levels)
        self.matrix = np.asarray(matrix, dtype=np.float32)
        self._row_of = {iid: i for i, iid in enumerate(self.image_ids)}
        if len(self._row_of) != len(self.image_ids):
            raise ValueError("duplicate image ids in pooled set")

    def __len__(self) -> int:
        return len(self.image_ids)

    @property
    def key(self) -> tuple:
        return (self.network, self.layer)

    def has(self, image_id: str) -> bool:
        return image_id in self._row_of

    def vector(self, image_id: str) -> np.ndarray:
        try:
            return self.matrix[self._row_of[image_id]]
        except KeyError:
            raise MissingVector(
                f"no pooled vector for image {image_id!r} in {self.network}/{self.layer}") from None

    # --- dump round trip ---

    @classmethod
    def read(cls, path: str | Path) -> "PooledSet":
        meta, matrix = read_dump(path)
        return cls(
            network=meta.network, layer=meta.layer, channels=meta.channels,
            preprocessing=meta.preprocessing,
            image_ids=[r.image_id for r in meta.records],
            kinds=[r.distortion_kind for r in meta.records],
            levels=[r.level_index for r in meta.records],
            matrix=matrix,
        )

    def write(self, path: str | Path) -> None:
        write_dump(
            path, network=self.network, layer=self.layer, channels=self.channels,
            preprocessing=self.preprocessing,
            records=list(zip(self.image_ids, self.kinds, self.levels)),
            vectors=self.matrix,
        )

    # --- derived views ---

    def subtract_references(self, manifest: Manifest) -> "PooledSet":
        """Semantics removal: subtract each image's reference vector, channel-wise.

        Reference rows become zero vectors; labels are kept as-is.
        """
        out = np.empty_like(self.matrix)
        for i, iid in enumerate(self.image_ids):
            ref_id = manifest.get(iid).reference_id
            out[i] = self.matrix[i] - self.vector(ref_id)
        return PooledSet(self.network, self.layer, self.channels, self.preprocessing,
                         self.image_ids, self.kinds, self.levels, out)

    def clustered_by_kind(self) -> ClusteredSet:
        """Group distorted-image vectors by distortion kind (reference rows excluded)."""
        mask = [k is not None for k in self.kinds]
        labels = [self.kinds[i] for i, m in enumerate(mask) if m]
        vectors = self.matrix[np.asarray(mask, dtype=bool)]
        return ClusteredSet.from_labeled(vectors.astype(np.float64), labels)
