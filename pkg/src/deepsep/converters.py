"""Helper converters from vendor database layouts to the normalized manifest.

Public IQA databases ship under license with mutable, vendor-specific ground
truth files, so these converters are shipped as documented helpers rather than
core operations. Each states the exact layout it assumes; check your release
against it before trusting the output.
"""

from __future__ import annotations

import csv
from pathlib import Path

from deepsep.data import Manifest, ManifestRow, Polarity
from deepsep.errors import ParseError


def convert_scored_listing(
    listing_csv: str | Path,
    database: str,
    polarity: Polarity,
    image_root: str = "",
) -> Manifest:
    """Build a manifest from a generic scored listing.

    Assumed layout: a CSV with columns

        image,reference,kinds,levels,score

    where `image`/`reference` are file paths relative to `image_root`, `kinds`
    and `levels` are '+'-joined ordered lists ('' for none), and `score` is
    the ground-truth value ('' for reference rows). Reference images must
    appear as their own rows (reference == image). Image ids are the file
    stems. This is the shape the LIVE/CSIQ/TID spreadsheets reduce to after
    a one-line export; the exact vendor parsing is left to that export step.
    """
    listing_csv = Path(listing_csv)
    if not listing_csv.exists():
        raise ParseError(f"listing not found: {listing_csv}")
    rows = []
    with open(listing_csv, newline="") as fh:
        reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
        required = {"image", "reference", "kinds", "levels", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(
                f"{listing_csv}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for rec in reader:
            image = rec["image"].strip()
            reference = rec["reference"].strip()
            kinds = tuple(k for k in rec["kinds"].split("+") if k)
            levels = tuple(int(v) for v in rec["levels"].split("+") if v)
            score = rec["score"].strip()
            rows.append(ManifestRow(
                image_path=str(Path(image_root) / image) if image_root else image,
                image_id=Path(image).stem,
                reference_id=Path(reference).stem,
                kinds=kinds,
                levels=levels,
                score=float(score) if score else None,
                polarity=polarity,
                database=database,
            ))
    return Manifest(rows)
