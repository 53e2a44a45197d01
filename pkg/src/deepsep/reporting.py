"""Provenance stamping, atomic file writes, and the Markdown summary report."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional, Sequence

import deepsep
from deepsep.errors import MissingInput
from deepsep.separability import DsiTable


def config_hash(config: dict) -> str:
    """Stable short hash of an effective configuration."""
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def provenance_line(seed: Optional[int], cfg_hash: str) -> str:
    seed_part = "none" if seed is None else str(seed)
    return f"deepsep={deepsep.__version__} seed={seed_part} config={cfg_hash}"


def provenance_dict(seed: Optional[int], cfg_hash: str) -> dict:
    return {"tool": "deepsep", "version": deepsep.__version__,
            "seed": seed, "config": cfg_hash}


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def render_markdown_report(tables: Sequence[tuple], out_path: str | Path,
                           provenance: str) -> None:
    """Summarize separability tables: best layer per network, full rankings.

    `tables` holds (source_name, DsiTable) pairs. Tables whose normalization
    sets differ are flagged as non-comparable rather than merged.
    """
    if not tables:
        raise MissingInput("no separability tables to report on")
    lines = [f"<!-- {provenance} -->", "# Distortion separability summary", ""]
    norm_sets = {t.normalization_set for _, t in tables}
    if len(norm_sets) > 1:
        lines += [
            "**Warning: inputs use different normalization sets; "
            "scores are NOT comparable across tables.**", "",
        ]
    for source, table in tables:
        lines += [f"## {source}", ""]
        best = table.best_per_network()
        lines += ["Best layer per network:", ""]
        lines += ["| network | layer | dsi |", "|---|---|---|"]
        for network in sorted(best):
            row = best[network]
            lines.append(f"| {network} | {row.layer} | {row.dsi:.4f} |")
        lines += ["", "Full ranking:", ""]
        lines += ["| network | layer | ch | db | s | dsi |", "|---|---|---|---|---|---|"]
        for row in sorted(table.rows, key=lambda r: -r.dsi):
            lines.append(
                f"| {row.network} | {row.layer} | {row.raw.ch:.4f} | "
                f"{row.raw.db:.4f} | {row.raw.s:.4f} | {row.dsi:.4f} |")
        lines.append("")
    atomic_write_text(out_path, "\n".join(lines) + "\n")


def collect_dsi_tables(input_dir: str | Path) -> list:
    """Load every DsiTable JSON under a directory (the `report` command's input)."""
    input_dir = Path(input_dir)
    found = []
    for path in sorted(input_dir.glob("*.json")):
        try:
            table = DsiTable.load_json(path)
        except (KeyError, ValueError, TypeError):
            continue  # not a separability table
        found.append((path.name, table))
    if not found:
        raise MissingInput(f"no separability tables found in {input_dir}")
    return found
