"""Normalized manifests for all corpora plus known database shapes.

One schema serves the synthetic corpus and the public IQA databases alike:
each row binds an image file to its reference, an ordered list of distortion
kinds/levels (multi-distortion rows carry ordered pairs), an optional
ground-truth quality score, and the score polarity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from deepsep.errors import DanglingReference, ParseError, SchemaViolation

MANIFEST_FIELDS = ("image_path", "image_id", "reference_id", "kinds", "levels",
                   "score", "polarity", "database")


class Polarity(Enum):
    """Whether larger ground-truth scores mean better (MOS) or worse (DMOS) quality."""

    HIGHER_IS_BETTER = "mos"
    HIGHER_IS_WORSE = "dmos"

    @classmethod
    def parse(cls, token: str) -> "Polarity":
        for member in cls:
            if member.value == token:
                return member
        raise ParseError(f"unknown polarity token {token!r} (expected 'mos' or 'dmos')")


@dataclass(frozen=True)
class ManifestRow:
    image_path: str
    image_id: str
    reference_id: str
    kinds: tuple
    levels: tuple
    score: Optional[float]
    polarity: Polarity
    database: str

    def __post_init__(self):
        if len(self.kinds) != len(self.levels):
            raise SchemaViolation(
                f"row {self.image_id!r}: kinds {self.kinds} and levels {self.levels} differ in length")
        if not self.image_id:
            raise SchemaViolation("empty image_id")
        if self.score is not None and not (self.score == self.score):  # NaN guard
            raise SchemaViolation(f"row {self.image_id!r}: score is not finite")

    @property
    def is_reference(self) -> bool:
        return self.image_id == self.reference_id

    @property
    def kind_label(self) -> str:
        """Ordered kinds as one label, e.g. 'gblur+jpeg'."""
        return "+".join(self.kinds)

    @property
    def level_label(self) -> str:
        return "+".join(str(v) for v in self.levels)


class Manifest:
    """A validated, immutable set of manifest rows indexed by image id."""

    def __init__(self, rows: Iterable[ManifestRow]):
        self.rows = tuple(rows)
        self._by_id = {}
        for row in self.rows:
            if row.image_id in self._by_id:
                raise SchemaViolation(f"duplicate image_id {row.image_id!r}")
            self._by_id[row.image_id] = row
        for row in self.rows:
            if row.reference_id not in self._by_id:
                raise DanglingReference(
                    f"row {row.image_id!r} references unknown id {row.reference_id!r}")

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, image_id: str) -> ManifestRow:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise KeyError(f"no manifest row for image_id {image_id!r}") from None

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._by_id

    @property
    def references(self) -> tuple:
        return tuple(r for r in self.rows if r.is_reference)

    @property
    def distorted(self) -> tuple:
        return tuple(r for r in self.rows if not r.is_reference)

    def resolve_path(self, row: ManifestRow, base: str | Path) -> Path:
        """Image paths are stored relative to the manifest's directory unless absolute."""
        p = Path(row.image_path)
        return p if p.is_absolute() else Path(base) / p

    # --- serialization ---

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix.lower() == ".json":
            payload = {"rows": [_row_to_dict(r) for r in self.rows]}
            path.write_text(json.dumps(payload, indent=2) + "\n")
            return
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MANIFEST_FIELDS)
            for r in self.rows:
                writer.writerow([
                    r.image_path, r.image_id, r.reference_id,
                    r.kind_label, r.level_label,
                    "" if r.score is None else repr(r.score),
                    r.polarity.value, r.database,
                ])

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        if not path.exists():
            raise ParseError(f"manifest file not found: {path}")
        if path.suffix.lower() == ".json":
            try:
                payload = json.loads(path.read_text())
                rows = [_row_from_dict(d) for d in payload["rows"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"bad JSON manifest {path}: {exc}") from exc
            return cls(rows)
        rows = []
        with open(path, newline="") as fh:
            lines = (ln for ln in fh if not ln.startswith("#"))
            reader = csv.DictReader(lines)
            if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
                raise ParseError(
                    f"manifest {path} has columns {reader.fieldnames}, expected {list(MANIFEST_FIELDS)}")
            for lineno, rec in enumerate(reader, start=2):
                try:
                    rows.append(_row_from_dict(rec))
                except (ValueError, ParseError) as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
        return cls(rows)


def _row_to_dict(r: ManifestRow) -> dict:
    return {
        "image_path": r.image_path, "image_id": r.image_id, "reference_id": r.reference_id,
        "kinds": r.kind_label, "levels": r.level_label,
        "score": r.score, "polarity": r.polarity.value, "database": r.database,
    }


def _row_from_dict(d: dict) -> ManifestRow:
    kinds_raw = d.get("kinds") or ""
    levels_raw = d.get("levels")
    levels_raw = "" if levels_raw is None else str(levels_raw)
    score = d.get("score")
    if score in ("", None):
        score_val = None
    else:
        score_val = float(score)
    return ManifestRow(
        image_path=d["image_path"],
        image_id=d["image_id"],
        reference_id=d["reference_id"],
        kinds=tuple(k for k in str(kinds_raw).split("+") if k),
        levels=tuple(int(v) for v in levels_raw.split("+") if v),
        score=score_val,
        polarity=d["polarity"] if isinstance(d["polarity"], Polarity) else Polarity.parse(str(d["polarity"])),
        database=d["database"],
    )


@dataclass(frozen=True)
class DatasetDescriptor:
    """Published shape of a known IQA database, for sanity-checking imported manifests."""

    name: str
    reference_count: int
    distorted_count: int
    distortion_type_count: Optional[int] = None
    level_count_range: Optional[tuple] = None


DESCRIPTORS = {
    d.name: d
    for d in (
        DatasetDescriptor("CSIQ", 30, 886, 6, (4, 5)),
        DatasetDescriptor("LIVE", 29, 779, 5, (7, 8)),
        DatasetDescriptor("TID2008", 25, 1700, 17, (4, 4)),
        DatasetDescriptor("TID2013", 25, 3000, 24, (5, 5)),
        # LIVEMD: two multiply-distorted subsets; type/level taxonomy lives in the manifest.
        DatasetDescriptor("LIVEMD", 15, 450, None, None),
    )
}


def validate_against(manifest: Manifest, descriptor: DatasetDescriptor) -> list:
    """Compare manifest cardinalities with the descriptor; returns warnings, never raises."""
    warnings = []
    n_refs = len(manifest.references)
    n_dist = len(manifest.distorted)
    if n_refs == 0 and n_dist == 0:
        warnings.append("manifest is empty: no reference rows, no distorted rows")
        warnings.append(f"expected {descriptor.reference_count} references, found 0")
        warnings.append(f"expected {descriptor.distorted_count} distorted images, found 0")
        return warnings
    if n_refs != descriptor.reference_count:
        warnings.append(
            f"reference count mismatch: expected {descriptor.reference_count}, found {n_refs}")
    if n_dist != descriptor.distorted_count:
        warnings.append(
            f"distorted count mismatch: expected {descriptor.distorted_count}, found {n_dist}")
    if descriptor.distortion_type_count is not None:
        kinds = {r.kind_label for r in manifest.distorted}
        if len(kinds) != descriptor.distortion_type_count:
            warnings.append(
                f"distortion type count mismatch: expected {descriptor.distortion_type_count}, "
                f"found {len(kinds)}")
    return warnings
