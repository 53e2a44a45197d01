"""Inference backends producing per-layer activations for images.

Two interchangeable sources exist: TorchScript graphs exported with one named
output per tap (live inference), and precomputed feature dumps (no inference).
Anything with an `extract_maps(image, layer_names)` method works as a backend
for the extraction pipeline.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from deepsep.data import Manifest
from deepsep.errors import BackendFailure, ImageTooSmall, UnknownLayer
from deepsep.features import (FeatureMap, LayerRegistry, LayerTap, PooledSet,
                              pool_spatial, registry)
from deepsep.image import ImageBuffer

METADATA_FILE = "deepsep_export.json"


def preprocess(img: ImageBuffer, preprocessing: dict) -> np.ndarray:
    """RGB uint8 -> [0,1] -> per-channel standardization; returns (1, 3, h, w) float32."""
    mean = np.asarray(preprocessing["mean"], dtype=np.float32)
    std = np.asarray(preprocessing["std"], dtype=np.float32)
    x = img.data.astype(np.float32) / np.float32(255.0)
    x = (x - mean) / std
    return np.ascontiguousarray(x.transpose(2, 0, 1))[None, ...]


class TorchscriptBackend:
    """Runs an exporter-produced TorchScript graph with named tap outputs."""

    def __init__(self, model_path: str | Path, reg: Optional[LayerRegistry] = None):
        import torch  # deferred: the numeric core works without torch installed

        self._torch = torch
        reg = reg or registry()
        extra = {METADATA_FILE: ""}
        try:
            self.module = torch.jit.load(str(model_path), map_location="cpu",
                                         _extra_files=extra)
        except Exception as exc:
            raise BackendFailure(f"cannot load TorchScript graph {model_path}: {exc}") from exc
        self.module.eval()
        try:
            self.metadata = json.loads(extra[METADATA_FILE].decode("utf-8")
                                       if isinstance(extra[METADATA_FILE], bytes)
                                       else extra[METADATA_FILE])
        except (ValueError, AttributeError) as exc:
            raise BackendFailure(
                f"graph {model_path} carries no {METADATA_FILE} metadata") from exc
        self.network = self.metadata["network"]
        self.taps = tuple(self.metadata["taps"])
        self.preprocessing = self.metadata.get("preprocessing", reg.preprocessing)
        self.registry = reg
        if self.network not in reg.networks:
            raise UnknownLayer(f"graph network {self.network!r} not in the registry")
        for name in self.taps:
            reg.tap(self.network, name)  # raises UnknownLayer on drift

    def _forward(self, img: ImageBuffer) -> dict:
        torch = self._torch
        batch = torch.from_numpy(preprocess(img, self.preprocessing))
        try:
            with torch.no_grad():
                out = self.module(batch)
        except Exception as exc:
            raise BackendFailure(f"inference failed: {exc}") from exc
        return {name: tensor for name, tensor in out.items()}

    def extract_maps(self, img: ImageBuffer, layer_names: Sequence[str]) -> dict:
        """One forward pass; returns {layer_name: FeatureMap} for the requested taps."""
        taps = {}
        for name in layer_names:
            tap = self.registry.tap(self.network, name)
            if name not in self.taps:
                raise UnknownLayer(
                    f"graph exposes taps {list(self.taps)}, not {name!r}")
            if min(img.width, img.height) < tap.min_input:
                raise ImageTooSmall(
                    f"{self.network}/{name} needs input >= {tap.min_input}px, "
                    f"got {img.width}x{img.height}")
            taps[name] = tap
        outputs = self._forward(img)
        maps = {}
        for name, tap in taps.items():
            if name not in outputs:
                raise BackendFailure(f"graph output missing tap {name!r}")
            arr = outputs[name][0].numpy().transpose(1, 2, 0)
            maps[name] = FeatureMap(tap=tap, values=arr)
        return maps

    def extract(self, img: ImageBuffer, tap: LayerTap) -> FeatureMap:
        if tap.network != self.network:
            raise UnknownLayer(
                f"backend serves {self.network!r}, asked for {tap.network!r}")
        return self.extract_maps(img, [tap.layer_name])[tap.layer_name]


def extract_pooled_sets(backend, manifest: Manifest, layer_names: Sequence[str],
                        base_dir: str | Path, threads: int = 1) -> dict:
    """Pool every manifest image at the given taps; returns {layer_name: PooledSet}.

    Images are loaded from paths relative to `base_dir` (the manifest's
    directory). One forward pass per image serves all requested taps; with
    threads > 1 images run concurrently (results keep manifest order, so the
    output is schedule-independent).
    """
    def pool_one(row):
        img = ImageBuffer.load(manifest.resolve_path(row, base_dir))
        maps = backend.extract_maps(img, layer_names)
        return {name: pool_spatial(maps[name]) for name in layer_names}

    rows = list(manifest)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pooled_rows = list(pool.map(pool_one, rows))
    else:
        pooled_rows = [pool_one(row) for row in rows]

    ids, kinds, levels = [], [], []
    columns = {name: [] for name in layer_names}
    for row, pooled in zip(rows, pooled_rows):
        for name in layer_names:
            columns[name].append(pooled[name])
        ids.append(row.image_id)
        kinds.append(row.kind_label or None)
        levels.append(row.levels[0] if len(row.levels) == 1 else None)
    out = {}
    for name in layer_names:
        tap = backend.registry.tap(backend.network, name)
        out[name] = PooledSet(
            network=backend.network, layer=name, channels=tap.channels,
            preprocessing=backend.preprocessing,
            image_ids=ids, kinds=kinds, levels=levels,
            matrix=np.stack(columns[name]) if ids else np.empty((0, tap.channels), np.float32),
        )
    return out
