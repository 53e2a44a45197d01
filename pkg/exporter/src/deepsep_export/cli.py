"""deepsep-export command line: graph export plus optional parity dumps."""

from __future__ import annotations

import sys

import click

from deepsep_export import ExportError
from deepsep_export.builders import (ExportSpec, WEIGHT_PRETRAINED, WEIGHT_RANDOM)
from deepsep_export.graphs import export_graph
from deepsep_export.parity import emit_parity_dumps
from deepsep_export.registry import Registry


def parse_mode(token: str):
    if token == WEIGHT_PRETRAINED:
        return WEIGHT_PRETRAINED, None
    if token.startswith(f"{WEIGHT_RANDOM}:"):
        return WEIGHT_RANDOM, int(token.split(":", 1)[1])
    raise click.BadParameter("expected 'pretrained' or 'random:<seed>'")


@click.command()
@click.option("--network", required=True,
              type=click.Choice(["alexnet", "inceptionv3", "resnet50",
                                 "squeezenet11", "vgg16"]))
@click.option("--taps", default="all", show_default=True,
              help="Comma-separated registry tap names, or 'all'.")
@click.option("--mode", default="pretrained", show_default=True,
              help="'pretrained' or 'random:<seed>'.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="layers.json override (defaults to the bundled copy).")
@click.option("--parity-images", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory of sample images for parity dumps.")
@click.option("--parity-out", type=click.Path(file_okay=False), default=None,
              help="Directory receiving one parity dump per tap.")
def main(network, taps, mode, out_path, registry_path, parity_images, parity_out):
    """Export a tap-annotated TorchScript graph; optionally emit parity dumps."""
    try:
        registry = Registry.load(registry_path)
        tap_list = registry.layer_names(network) if taps == "all" else \
            [t.strip() for t in taps.split(",") if t.strip()]
        weight_mode, seed = parse_mode(mode)
        spec = ExportSpec(network=network, taps=tuple(tap_list),
                          weight_mode=weight_mode, seed=seed)
        path = export_graph(spec, out_path, registry)
        click.echo(f"wrote {path} ({path.stat().st_size / 1e6:.1f} MB, "
                   f"{len(tap_list)} taps, {weight_mode}"
                   f"{'' if seed is None else f' seed={seed}'})")
        if parity_images and parity_out:
            written = emit_parity_dumps(spec, registry, parity_images, parity_out)
            for p in written:
                click.echo(f"wrote {p}")
        elif parity_images or parity_out:
            raise ExportError("--parity-images and --parity-out go together")
    except ExportError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
