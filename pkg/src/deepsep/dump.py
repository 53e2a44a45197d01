"""Binary feature-dump files: pooled vectors for one (network, layer, corpus) triple.

Layout (little-endian):

    magic  6 bytes   b"DFEAT\\0"
    u16              format version (currently 1)
    u32              header length in bytes
    header           UTF-8 JSON: {network, layer, channels, preprocessing,
                                  records: [{image_id, distortion_kind, level_index, offset}]}
    payload          contiguous float32 values

`offset` is the element index (not byte offset) of a record's first float.
Offsets are strictly increasing and the payload holds exactly
record_count * channels floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from deepsep.errors import BadMagic, CorruptIndex, VersionMismatch

MAGIC = b"DFEAT\x00"
VERSION = 1


@dataclass(frozen=True)
class DumpRecord:
    image_id: str
    distortion_kind: Optional[str]
    level_index: Optional[int]
    offset: int


@dataclass(frozen=True)
class DumpMeta:
    network: str
    layer: str
    channels: int
    preprocessing: dict
    records: tuple


def write_dump(
    path: str | Path,
    network: str,
    layer: str,
    channels: int,
    preprocessing: dict,
    records: Sequence[tuple],
    vectors: np.ndarray,
) -> None:
    """Write records (image_id, distortion_kind, level_index) with their float32 vectors.

    `vectors` is an (n, channels) array; rows pair with `records` by position.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[1] != channels:
        raise ValueError(f"vectors must be (n, {channels}), got {vectors.shape}")
    if len(records) != vectors.shape[0]:
        raise ValueError(f"{len(records)} records but {vectors.shape[0]} vectors")
    header = {
        "network": network,
        "layer": layer,
        "channels": int(channels),
        "preprocessing": preprocessing,
        "records": [
            {
                "image_id": image_id,
                "distortion_kind": kind,
                "level_index": level,
                "offset": i * int(channels),
            }
            for i, (image_id, kind, level) in enumerate(records)
        ],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(2, "little"))
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(vectors.astype("<f4", copy=False).tobytes())
    tmp.replace(path)


def read_dump(path: str | Path):
    """Read a dump file; returns (DumpMeta, (n, channels) float32 array)."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 6 or raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not a feature-dump file")
    version = int.from_bytes(raw[6:8], "little")
    if version != VERSION:
        raise VersionMismatch(f"{path}: format version {version}, reader supports {VERSION}")
    header_len = int.from_bytes(raw[8:12], "little")
    header_end = 12 + header_len
    if header_end > len(raw):
        raise CorruptIndex(f"{path}: header length {header_len} exceeds file size")
    try:
        header = json.loads(raw[12:header_end].decode("utf-8"))
        channels = int(header["channels"])
        recs = header["records"]
    except (ValueError, KeyError) as exc:
        raise CorruptIndex(f"{path}: malformed header: {exc}") from exc

    payload = np.frombuffer(raw[header_end:], dtype="<f4")
    expected = len(recs) * channels
    if payload.size != expected:
        raise CorruptIndex(
            f"{path}: payload holds {payload.size} floats, expected {expected} "
            f"({len(recs)} records x {channels} channels)")

    records = []
    prev = -1
    for rec in recs:
        offset = int(rec["offset"])
        if offset <= prev:
            raise CorruptIndex(f"{path}: record offsets not strictly increasing at {offset}")
        if offset + channels > payload.size:
            raise CorruptIndex(f"{path}: record offset {offset} runs past payload")
        prev = offset
        records.append(DumpRecord(
            image_id=rec["image_id"],
            distortion_kind=rec.get("distortion_kind"),
            level_index=rec.get("level_index"),
            offset=offset,
        ))

    matrix = np.stack([payload[r.offset:r.offset + channels] for r in records]) \
        if records else np.empty((0, channels), dtype=np.float32)
    meta = DumpMeta(
        network=header["network"],
        layer=header["layer"],
        channels=channels,
        preprocessing=dict(header.get("preprocessing", {})),
        records=tuple(records),
    )
    return meta, matrix
