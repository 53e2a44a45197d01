"""Shared layer registry: the repo-root layers.json is the single source of truth."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from deepsep_export import TapNotFound, UnknownNetwork


class Registry:
    def __init__(self, spec: dict):
        self.version = spec["version"]
        self.preprocessing = spec["preprocessing"]
        self.networks = {
            name: [(e["name"], int(e["channels"]), int(e["min_input"]))
                   for e in body["layers"]]
            for name, body in spec["networks"].items()
        }

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Registry":
        if path is not None:
            return cls(json.loads(Path(path).read_text()))
        text = resources.files("deepsep_export").joinpath("resources/layers.json").read_text()
        return cls(json.loads(text))

    def layer_names(self, network: str) -> list:
        if network not in self.networks:
            raise UnknownNetwork(
                f"unknown network {network!r}; known: {sorted(self.networks)}")
        return [name for name, _, _ in self.networks[network]]

    def channels(self, network: str, tap: str) -> int:
        for name, ch, _ in self.networks[network]:
            if name == tap:
                return ch
        raise TapNotFound(f"no tap {tap!r} in {network}")

    def validate_taps(self, network: str, taps: list) -> list:
        known = self.layer_names(network)
        for tap in taps:
            if tap not in known:
                raise TapNotFound(f"no tap {tap!r} in {network}; known: {known}")
        return taps
