"""Feature-dump files in the shared binary layout, written and read independently.

Layout (little-endian): magic b"DFEAT\\0", u16 version = 1, u32 header length,
UTF-8 JSON header {network, layer, channels, preprocessing, records:
[{image_id, distortion_kind, level_index, offset}]}, then a contiguous float32
payload; `offset` is the element index of a record's first float. This module
deliberately reimplements the format rather than importing the consumer's
code, so round trips across the two implementations exercise the contract.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from deepsep_export import ExportError

MAGIC = b"DFEAT\x00"
VERSION = 1


def write_dump(path: str | Path, network: str, layer: str, channels: int,
               preprocessing: dict, image_ids: Sequence[str],
               vectors: np.ndarray) -> Path:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape != (len(image_ids), channels):
        raise ExportError(
            f"vectors must be ({len(image_ids)}, {channels}), got {vectors.shape}")
    header = json.dumps({
        "network": network,
        "layer": layer,
        "channels": int(channels),
        "preprocessing": preprocessing,
        "records": [
            {"image_id": iid, "distortion_kind": None, "level_index": None,
             "offset": i * int(channels)}
            for i, iid in enumerate(image_ids)
        ],
    }).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(2, "little"))
        fh.write(len(header).to_bytes(4, "little"))
        fh.write(header)
        fh.write(vectors.tobytes())
    return path


def read_dump(path: str | Path):
    """Returns (header dict, (n, channels) float32 matrix); validates the layout."""
    raw = Path(path).read_bytes()
    if raw[:6] != MAGIC:
        raise ExportError(f"{path}: bad magic")
    if int.from_bytes(raw[6:8], "little") != VERSION:
        raise ExportError(f"{path}: unsupported version")
    hlen = int.from_bytes(raw[8:12], "little")
    header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    payload = np.frombuffer(raw[12 + hlen:], dtype="<f4")
    channels = int(header["channels"])
    records = header["records"]
    if payload.size != len(records) * channels:
        raise ExportError(f"{path}: payload size mismatch")
    matrix = payload.reshape(len(records), channels) if records else \
        payload.reshape(0, channels)
    return header, matrix
