"""Parity dumps: pooled tap activations computed in the source framework.

Activations are captured with forward hooks on the eager torchvision model,
an execution route independent of the scripted graph, so agreement between
these dumps and a graph-backend extraction validates the whole export chain.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from deepsep_export import ExportError
from deepsep_export.builders import ExportSpec, build_stages
from deepsep_export.dumps import write_dump
from deepsep_export.registry import Registry

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


def load_images(images_dir: str | Path) -> list:
    files = sorted(p for p in Path(images_dir).iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ExportError(f"no images under {images_dir}")
    out = []
    for p in files:
        with Image.open(p) as im:
            out.append((p.stem, np.asarray(im.convert("RGB"))))
    return out


def pooled_tap_vectors(spec: ExportSpec, registry: Registry, images: list) -> dict:
    """Run the eager stage stack once per image; returns {tap: (n, c) float32}."""
    registry.validate_taps(spec.network, list(spec.taps))
    stages = build_stages(spec)
    grabbed: dict = {}
    hooks = []
    for module, name in stages:
        if name is not None:
            def make_hook(tap_name):
                def hook(_m, _i, out):
                    grabbed[tap_name] = out.detach()
                return hook
            hooks.append(module.register_forward_hook(make_hook(name)))

    mean = np.asarray(registry.preprocessing["mean"], dtype=np.float32)
    std = np.asarray(registry.preprocessing["std"], dtype=np.float32)
    pooled = {name: [] for _, name in stages if name is not None}
    try:
        with torch.no_grad():
            for _image_id, arr in images:
                x = (arr.astype(np.float32) / 255.0 - mean) / std
                t = torch.from_numpy(np.ascontiguousarray(x.transpose(2, 0, 1)))[None]
                for module, _ in stages:
                    t = module(t)
                for tap, tensor in grabbed.items():
                    vec = tensor[0].numpy().astype(np.float64).mean(axis=(1, 2))
                    pooled[tap].append(vec.astype(np.float32))
    finally:
        for h in hooks:
            h.remove()
    return {tap: np.stack(vecs) for tap, vecs in pooled.items()}


def emit_parity_dumps(spec: ExportSpec, registry: Registry,
                      images_dir: str | Path, out_dir: str | Path) -> list:
    """Write one dump per tap for the sample images; returns written paths."""
    images = load_images(images_dir)
    vectors = pooled_tap_vectors(spec, registry, images)
    written = []
    for tap, matrix in vectors.items():
        channels = registry.channels(spec.network, tap)
        if matrix.shape[1] != channels:
            raise ExportError(
                f"{spec.network}/{tap}: pooled width {matrix.shape[1]} != "
                f"registry channels {channels}")
        path = Path(out_dir) / f"{spec.network}_{tap}.dfeat"
        write_dump(path, spec.network, tap, channels, registry.preprocessing,
                   [iid for iid, _ in images], matrix)
        written.append(path)
    return written
