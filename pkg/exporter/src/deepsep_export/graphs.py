"""TorchScript export with one named graph output per tap."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List

import torch

from deepsep_export.builders import ExportSpec, build_stages
from deepsep_export.registry import Registry

METADATA_FILE = "deepsep_export.json"


class TapModule(torch.nn.Module):
    """Runs stages sequentially, collecting the named ones into a dict output."""

    def __init__(self, stages: List[torch.nn.Module], tap_names: List[str]):
        super().__init__()
        self.stages = torch.nn.ModuleList(stages)
        self.tap_names = tap_names  # '' marks an unnamed stage

    def forward(self, x: torch.Tensor) -> Dict[str, torch.Tensor]:
        out: Dict[str, torch.Tensor] = {}
        i = 0
        for stage in self.stages:
            x = stage(x)
            name = self.tap_names[i]
            if name != "":
                out[name] = x
            i += 1
        return out


def build_tap_module(spec: ExportSpec, registry: Registry) -> TapModule:
    registry.validate_taps(spec.network, list(spec.taps))
    stages = build_stages(spec)
    modules = [m for m, _ in stages]
    names = [n if n else "" for _, n in stages]
    return TapModule(modules, names).eval()


def export_graph(spec: ExportSpec, out_path: str | Path, registry: Registry) -> Path:
    """Script the tap module and save it with export metadata attached.

    Scripted (not traced) graphs keep spatial dimensions fully dynamic, so any
    input size the receptive stack tolerates works at inference time.
    """
    module = build_tap_module(spec, registry)
    scripted = torch.jit.script(module)
    metadata = {
        "network": spec.network,
        "taps": [n for n in module.tap_names if n],
        "weight_mode": spec.weight_mode,
        "seed": spec.seed,
        "registry_version": registry.version,
        "preprocessing": registry.preprocessing,
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    torch.jit.save(scripted, str(out_path),
                   _extra_files={METADATA_FILE: json.dumps(metadata)})
    return out_path


def load_graph_metadata(path: str | Path) -> dict:
    extra = {METADATA_FILE: ""}
    torch.jit.load(str(path), map_location="cpu", _extra_files=extra)
    raw = extra[METADATA_FILE]
    return json.loads(raw.decode("utf-8") if isinstance(raw, bytes) else raw)
