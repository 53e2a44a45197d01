"""Command-line interface: each pipeline stage as a subcommand, plus `pipeline`.

Stage failures map to distinct exit codes so callers can tell what broke:

    10 distort, 11 extract, 12 dsi, 13 pca-sweep, 14 rriqa, 15 recognize,
    16 report, 2 configuration/usage errors.

All report files carry a provenance header (tool version, seed, config hash)
and are written atomically (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click


from deepsep.data import Manifest
from deepsep.distort import DEFAULT_LADDER, DistortionLadder, generate_corpus
from deepsep.errors import DeepsepError, MissingInput
from deepsep.features import PooledSet, registry
from deepsep.image import ImageBuffer
from deepsep.quality import (SplitPlan, evaluate_rriqa, write_correlation_csv,
                             write_correlation_json)
from deepsep.recognition import (TASKS, evaluate_recognition, write_accuracy_csv)
from deepsep.reporting import (collect_dsi_tables, config_hash, provenance_dict,
                               provenance_line, render_markdown_report)
from deepsep.separability import index_triple, normalize_indices, pca_sweep

STAGE_EXIT = {"distort": 10, "extract": 11, "dsi": 12, "pca-sweep": 13,
              "rriqa": 14, "recognize": 15, "report": 16}

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def _fail(stage: str, message: str) -> None:
    click.echo(f"error [{stage}]: {message}", err=True)
    sys.exit(STAGE_EXIT[stage])


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed for anything stochastic.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for image synthesis/extraction.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML or JSON config file (used by `pipeline`).")
@click.pass_context
def main(ctx, seed, threads, config_path):
    """Distortion separability of deep features: synthesis, extraction, scoring."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["threads"] = threads
    ctx.obj["config_path"] = config_path


def _provenance(ctx, extra: dict):
    cfg = {"command": ctx.command.name, **extra}
    h = config_hash(cfg)
    seed = ctx.obj.get("seed")
    return provenance_line(seed, h), provenance_dict(seed, h)


# ----------------------------------------------------------------- distort

@main.command()
@click.option("--refs", "refs_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--ladder", "ladder_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--database", default="synthetic", show_default=True)
@click.pass_context
def distort(ctx, refs_dir, out_dir, ladder_path, database):
    """Generate the 3 kinds x 9 levels distorted corpus from a directory of references."""
    try:
        ladder = DistortionLadder.from_json(ladder_path) if ladder_path else DEFAULT_LADDER
        ref_files = sorted(
            p for p in Path(refs_dir).iterdir()
            if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not ref_files:
            raise DeepsepError(f"no reference images found under {refs_dir}")
        references = [(p.stem, ImageBuffer.load(p)) for p in ref_files]
        manifest = generate_corpus(references, out_dir, seed=ctx.obj["seed"],
                                   ladder=ladder, database=database,
                                   threads=ctx.obj["threads"])
        line, _ = _provenance(ctx, {"refs": refs_dir, "database": database,
                                    "ladder": ladder_path})
        manifest_file = Path(out_dir) / "manifest.csv"
        manifest_file.write_text(f"# {line}\n" + manifest_file.read_text())
        click.echo(f"wrote {len(manifest.distorted)} distorted images "
                   f"({len(manifest.references)} references) to {out_dir}")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("distort", str(exc))


# ----------------------------------------------------------------- extract

def _cache_key(model_path: Path, layer: str, manifest_path: Path) -> str:
    h = hashlib.sha256()
    h.update(model_path.read_bytes())
    h.update(layer.encode())
    h.update(manifest_path.read_bytes())
    return h.hexdigest()[:24]


@main.command()
@click.option("--backend", "backend_name", type=click.Choice(["torchscript"]),
              default="torchscript", show_default=True)
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--layer", "layers", required=True,
              help="Tap name, or comma-separated names, or 'all'.")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True,
              help="Dump file (single layer) or directory (multiple layers).")
@click.pass_context
def extract(ctx, backend_name, model_path, layers, manifest_path, out_path):
    """Pool deep features for every manifest image at one or more taps."""
    try:
        from deepsep.backends import TorchscriptBackend, extract_pooled_sets

        backend = TorchscriptBackend(model_path)
        manifest = Manifest.load(manifest_path)
        if layers == "all":
            names = [n for n in registry().layer_names(backend.network) if n in backend.taps]
        else:
            names = [s.strip() for s in layers.split(",") if s.strip()]
        out = Path(out_path)
        multi = len(names) > 1
        if multi:
            out.mkdir(parents=True, exist_ok=True)

        cache_dir = os.environ.get("DEEPSEP_CACHE_DIR")
        todo = list(names)
        cached = {}
        if cache_dir:
            Path(cache_dir).mkdir(parents=True, exist_ok=True)
            still = []
            for name in todo:
                key = _cache_key(Path(model_path), name, Path(manifest_path))
                cpath = Path(cache_dir) / f"{key}.dfeat"
                if cpath.exists():
                    cached[name] = PooledSet.read(cpath)
                else:
                    still.append(name)
            todo = still

        made = extract_pooled_sets(backend, manifest, todo, Path(manifest_path).parent,
                                   threads=ctx.obj["threads"]) if todo else {}
        if cache_dir:
            for name, pooled in made.items():
                key = _cache_key(Path(model_path), name, Path(manifest_path))
                pooled.write(Path(cache_dir) / f"{key}.dfeat")
        made.update(cached)

        for name in names:
            pooled = made[name]
            target = out / f"{backend.network}_{name}.dfeat" if multi else out
            pooled.write(target)
            click.echo(f"wrote {len(pooled)} vectors ({backend.network}/{name}) to {target}")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("extract", str(exc))


# ----------------------------------------------------------------- dsi

@main.command()
@click.option("--dumps", "dumps_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@click.option("--subtract-reference", is_flag=True, default=False,
              help="Remove image content by subtracting each reference's vector first.")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Required with --subtract-reference.")
@click.pass_context
def dsi(ctx, dumps_dir, out_csv, subtract_reference, manifest_path):
    """Score every dump in a directory and normalize into one separability table."""
    try:
        dump_files = sorted(Path(dumps_dir).glob("*.dfeat"))
        if not dump_files:
            raise DeepsepError(f"no .dfeat dumps under {dumps_dir}")
        manifest = Manifest.load(manifest_path) if manifest_path else None
        if subtract_reference and manifest is None:
            raise DeepsepError("--subtract-reference needs --manifest")
        raw = {}
        for path in dump_files:
            pooled = PooledSet.read(path)
            if subtract_reference:
                pooled = pooled.subtract_references(manifest)
            raw[(pooled.network, pooled.layer)] = index_triple(pooled.clustered_by_kind())
        table = normalize_indices(raw)
        line, pdict = _provenance(ctx, {"dumps": [p.name for p in dump_files],
                                        "subtract_reference": subtract_reference})
        table.save_csv(out_csv, provenance=line)
        table.save_json(Path(out_csv).with_suffix(".json"), provenance=pdict)
        click.echo(f"wrote {len(table.rows)} rows to {out_csv}")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("dsi", str(exc))


# ----------------------------------------------------------------- pca-sweep

@main.command("pca-sweep")
@click.option("--dump", "dump_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dims", required=True,
              help="Comma-separated dimensions; 'full' stands for the layer width.")
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def pca_sweep_cmd(ctx, dump_path, dims, out_csv):
    """Recompute the separability score after PCA projection to each dimension."""
    try:
        pooled = PooledSet.read(dump_path)
        cs = pooled.clustered_by_kind()
        full = cs.vectors.shape[1]
        dim_list = []
        for token in dims.split(","):
            token = token.strip()
            if not token:
                continue
            dim_list.append(full if token == "full" else int(token))
        points = pca_sweep(cs, dim_list)
        line, _ = _provenance(ctx, {"dump": Path(dump_path).name, "dims": dim_list})
        rows = ["# " + line, "dim,ch,db,s,dsi"]
        for p in points:
            rows.append(f"{p.dim},{p.raw.ch!r},{p.raw.db!r},{p.raw.s!r},{p.dsi!r}")
        Path(out_csv).write_text("\n".join(rows) + "\n")
        click.echo(f"wrote sweep over {len(points)} dims to {out_csv}")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("pca-sweep", str(exc))


# ----------------------------------------------------------------- rriqa

@main.command()
@click.option("--dump", "dump_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--splits", type=int, default=100, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.option("--kind", type=click.Choice(["awgn", "gblur", "jpeg"]), default=None)
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def rriqa(ctx, dump_path, manifest_path, splits, train_fraction, kind, out_csv):
    """Correlate feature distance with ground-truth quality across random splits."""
    try:
        pooled = PooledSet.read(dump_path)
        manifest = Manifest.load(manifest_path)
        plan = SplitPlan(split_count=splits, train_fraction=train_fraction,
                         master_seed=ctx.obj["seed"])
        report = evaluate_rriqa(pooled, manifest, plan, kind=kind)
        line, pdict = _provenance(ctx, {"dump": Path(dump_path).name, "splits": splits,
                                        "train_fraction": train_fraction, "kind": kind})
        write_correlation_csv(out_csv, [report], provenance=line)
        write_correlation_json(Path(out_csv).with_suffix(".json"), [report], provenance=pdict)
        click.echo(f"{report.database}/{report.network}/{report.layer}"
                   f"{'/' + kind if kind else ''}: "
                   f"mean SROCC {report.mean_srocc:.4f}, mean PLCC {report.mean_plcc:.4f}")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("rriqa", str(exc))


# ----------------------------------------------------------------- recognize

@main.command()
@click.option("--dump", "dump_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--task", type=click.Choice(list(TASKS)), default="type", show_default=True)
@click.option("--k", "k_values", default="3,9", show_default=True,
              help="Comma-separated neighbor counts.")
@click.option("--splits", type=int, default=100, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.option("--out-prefix", "out_prefix", required=True,
              help="Prefix for accuracy and confusion CSVs.")
@click.pass_context
def recognize(ctx, dump_path, manifest_path, task, k_values, splits, train_fraction, out_prefix):
    """k-NN distortion type (or type+severity) recognition across random splits."""
    try:
        pooled = PooledSet.read(dump_path)
        manifest = Manifest.load(manifest_path)
        plan = SplitPlan(split_count=splits, train_fraction=train_fraction,
                         master_seed=ctx.obj["seed"])
        ks = [int(s) for s in k_values.split(",") if s.strip()]
        results = [evaluate_recognition(pooled, manifest, task, k, plan) for k in ks]
        line, _ = _provenance(ctx, {"dump": Path(dump_path).name, "task": task,
                                    "k": ks, "splits": splits})
        write_accuracy_csv(f"{out_prefix}_accuracy.csv", results, provenance=line)
        for r in results:
            r.mean_confusion.save_csv(f"{out_prefix}_confusion_k{r.k}.csv", provenance=line)
            r.mean_confusion.save_csv(f"{out_prefix}_confusion_k{r.k}_normalized.csv",
                                      normalized=True, provenance=line)
            click.echo(f"{r.task} k={r.k}: mean accuracy {r.mean_accuracy * 100:.1f}%")
    except (DeepsepError, ValueError, OSError) as exc:
        _fail("recognize", str(exc))


# ----------------------------------------------------------------- report

@main.command()
@click.option("--inputs", "inputs_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_md", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def report(ctx, inputs_dir, out_md):
    """Render a Markdown summary (best layer per network) from separability tables."""
    try:
        tables = collect_dsi_tables(inputs_dir)
        line, _ = _provenance(ctx, {"inputs": inputs_dir})
        render_markdown_report(tables, out_md, provenance=line)
        click.echo(f"wrote report over {len(tables)} table(s) to {out_md}")
    except (MissingInput, DeepsepError, ValueError, OSError) as exc:
        _fail("report", str(exc))


# ----------------------------------------------------------------- pipeline

def _load_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".toml"):
        import tomli
        return tomli.loads(text.decode("utf-8"))
    return json.loads(text.decode("utf-8"))


@main.command()
@click.pass_context
def pipeline(ctx):
    """Run the configured stages end to end (distort -> extract -> dsi -> ...).

    Requires --config. Each enabled stage writes its artifacts under the
    configured work_dir; the first failing stage aborts the run with its
    stage-specific exit code.
    """
    config_path = ctx.obj.get("config_path")
    if not config_path:
        click.echo("error [pipeline]: --config is required", err=True)
        sys.exit(2)
    cfg = _load_config(config_path)
    stage_names = ("distort", "extract", "dsi", "pca_sweep", "rriqa", "recognize", "report")
    enabled = [s for s in stage_names if s in cfg]
    if not enabled:
        click.echo("error [pipeline]: config enables no stages", err=True)
        sys.exit(2)
    work_dir = Path(cfg.get("work_dir", "."))
    work_dir.mkdir(parents=True, exist_ok=True)
    seed = int(cfg.get("seed", ctx.obj["seed"]))
    ctx.obj["seed"] = seed

    corpus_dir = work_dir / "corpus"
    dumps_dir = work_dir / "dumps"
    reports_dir = work_dir / "reports"

    if "distort" in cfg:
        body = cfg["distort"]
        ctx.invoke(distort, refs_dir=body["refs"], out_dir=str(corpus_dir),
                   ladder_path=body.get("ladder"), database=body.get("database", "synthetic"))
    manifest_path = cfg.get("manifest", str(corpus_dir / "manifest.csv"))

    if "extract" in cfg:
        dumps_dir.mkdir(parents=True, exist_ok=True)
        for model in cfg["extract"]["models"]:
            ctx.invoke(extract, backend_name=model.get("backend", "torchscript"),
                       model_path=model["path"], layers=model.get("layers", "all"),
                       manifest_path=manifest_path, out_path=str(dumps_dir))

    reports_dir.mkdir(parents=True, exist_ok=True)
    if "dsi" in cfg:
        body = cfg["dsi"] if isinstance(cfg["dsi"], dict) else {}
        ctx.invoke(dsi, dumps_dir=str(dumps_dir), out_csv=str(reports_dir / "dsi.csv"),
                   subtract_reference=body.get("subtract_reference", False),
                   manifest_path=manifest_path if body.get("subtract_reference") else None)

    if "pca_sweep" in cfg:
        body = cfg["pca_sweep"]
        ctx.invoke(pca_sweep_cmd, dump_path=str(dumps_dir / body["dump"]),
                   dims=body.get("dims", "2,full"),
                   out_csv=str(reports_dir / "pca_sweep.csv"))

    if "rriqa" in cfg:
        body = cfg["rriqa"]
        for dump_name in body["dumps"]:
            stem = Path(dump_name).stem
            for kind in body.get("kinds", [None]) or [None]:
                suffix = f"_{kind}" if kind else ""
                ctx.invoke(rriqa, dump_path=str(dumps_dir / dump_name),
                           manifest_path=manifest_path,
                           splits=body.get("splits", 100),
                           train_fraction=body.get("train_fraction", 0.8),
                           kind=kind,
                           out_csv=str(reports_dir / f"rriqa_{stem}{suffix}.csv"))

    if "recognize" in cfg:
        body = cfg["recognize"]
        for dump_name in body["dumps"]:
            stem = Path(dump_name).stem
            for task in body.get("tasks", ["type"]):
                ctx.invoke(recognize, dump_path=str(dumps_dir / dump_name),
                           manifest_path=manifest_path, task=task,
                           k_values=",".join(str(k) for k in body.get("k", [3, 9])),
                           splits=body.get("splits", 100),
                           train_fraction=body.get("train_fraction", 0.8),
                           out_prefix=str(reports_dir / f"recognize_{stem}_{task}"))

    if "report" in cfg:
        ctx.invoke(report, inputs_dir=str(reports_dir), out_md=str(reports_dir / "summary.md"))
    click.echo(f"pipeline complete; artifacts under {work_dir}")


if __name__ == "__main__":
    main()
