from __future__ import annotations

import json
import shutil

import numpy as np
import pytest
from click.testing import CliRunner

from deepsep.cli import main
from deepsep.data import Manifest
from deepsep.features import PooledSet

from conftest import FIXTURES, checker_image, gradient_image


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def refs_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("refs")
    # 96px references keep CLI runs quick but big enough for the fire4 tap
    checker_image(96, 96, cell=12).save(d / "check.png")
    checker_image(96, 96, cell=5).save(d / "check5.png")
    gradient_image(96, 96).save(d / "grad.png")
    rng = np.random.default_rng(0)
    from deepsep.image import ImageBuffer
    ImageBuffer(rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)).save(d / "noise.png")
    blob = rng.integers(60, 200, size=(12, 12, 3), dtype=np.uint8)
    ImageBuffer(np.kron(blob, np.ones((8, 8, 1), dtype=np.uint8))).save(d / "blocks.png")
    return d


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory, refs_dir):
    out = tmp_path_factory.mktemp("corpus")
    result = CliRunner().invoke(main, ["--seed", "5", "distort",
                                       "--refs", str(refs_dir), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def dumps_dir(tmp_path_factory, corpus_dir):
    out = tmp_path_factory.mktemp("dumps")
    result = CliRunner().invoke(main, [
        "extract", "--model", str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
        "--layer", "conv1,fire4", "--manifest", str(corpus_dir / "manifest.csv"),
        "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


class TestDistortCommand:
    def test_corpus_files_and_manifest(self, corpus_dir):
        manifest = Manifest.load(corpus_dir / "manifest.csv")
        assert len(manifest.distorted) == 5 * 27
        assert len(manifest.references) == 5

    def test_missing_refs_dir_fails(self, runner, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        result = runner.invoke(main, ["distort", "--refs", str(empty),
                                      "--out", str(tmp_path / "out")])
        assert result.exit_code == 10

    def test_rerun_is_byte_identical(self, runner, refs_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            res = runner.invoke(main, ["--seed", "5", "distort", "--refs", str(refs_dir),
                                       "--out", str(out)])
            assert res.exit_code == 0
        assert (a / "manifest.csv").read_bytes() == (b / "manifest.csv").read_bytes()
        assert (a / "check_awgn_9.png").read_bytes() == (b / "check_awgn_9.png").read_bytes()


class TestExtractCommand:
    def test_dumps_written(self, dumps_dir):
        conv1 = PooledSet.read(dumps_dir / "squeezenet11_conv1.dfeat")
        fire4 = PooledSet.read(dumps_dir / "squeezenet11_fire4.dfeat")
        assert conv1.channels == 64
        assert fire4.channels == 256
        assert len(conv1) == 5 * 28

    def test_single_layer_out_is_file(self, runner, corpus_dir, tmp_path):
        out = tmp_path / "single.dfeat"
        result = runner.invoke(main, [
            "extract", "--model", str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
            "--layer", "conv1", "--manifest", str(corpus_dir / "manifest.csv"),
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert PooledSet.read(out).layer == "conv1"

    def test_cache_dir_round_trip(self, runner, corpus_dir, tmp_path, monkeypatch):
        cache = tmp_path / "cache"
        monkeypatch.setenv("DEEPSEP_CACHE_DIR", str(cache))
        args = ["extract", "--model", str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
                "--layer", "conv1", "--manifest", str(corpus_dir / "manifest.csv")]
        r1 = runner.invoke(main, args + ["--out", str(tmp_path / "one.dfeat")])
        assert r1.exit_code == 0, r1.output
        assert list(cache.glob("*.dfeat")), "cache must hold the extracted dump"
        r2 = runner.invoke(main, args + ["--out", str(tmp_path / "two.dfeat")])
        assert r2.exit_code == 0
        assert (tmp_path / "one.dfeat").read_bytes() == (tmp_path / "two.dfeat").read_bytes()

    def test_unknown_layer_fails_with_extract_code(self, runner, corpus_dir, tmp_path):
        result = runner.invoke(main, [
            "extract", "--model", str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
            "--layer", "fire9", "--manifest", str(corpus_dir / "manifest.csv"),
            "--out", str(tmp_path / "x.dfeat")])
        assert result.exit_code == 11


class TestDsiCommand:
    def test_table_normalized_over_both_layers(self, runner, dumps_dir, tmp_path):
        out = tmp_path / "table.csv"
        result = runner.invoke(main, ["dsi", "--dumps", str(dumps_dir),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        text = out.read_text()
        assert text.startswith("# deepsep=")
        lines = [l for l in text.splitlines() if not l.startswith("#")]
        assert lines[0] == "network,layer,ch,db,s,ch_norm,db_norm,s_norm,dsi"
        assert len(lines) == 3
        payload = json.loads(out.with_suffix(".json").read_text())
        assert len(payload["normalization_set"]) == 2

    def test_subtract_reference_variant(self, runner, dumps_dir, corpus_dir, tmp_path):
        out = tmp_path / "nosem.csv"
        result = runner.invoke(main, ["dsi", "--dumps", str(dumps_dir),
                                      "--out", str(out), "--subtract-reference",
                                      "--manifest", str(corpus_dir / "manifest.csv")])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_empty_dir_fails(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["dsi", "--dumps", str(empty),
                                      "--out", str(tmp_path / "t.csv")])
        assert result.exit_code == 12


class TestPcaSweepCommand:
    def test_sweep_rows(self, runner, dumps_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        result = runner.invoke(main, [
            "pca-sweep", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--dims", "2,8,32,full", "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "dim,ch,db,s,dsi"
        assert len(lines) == 5

    def test_missing_two_fails(self, runner, dumps_dir, tmp_path):
        result = runner.invoke(main, [
            "pca-sweep", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--dims", "8,full", "--out", str(tmp_path / "s.csv")])
        assert result.exit_code == 13


class TestRriqaCommand:
    def test_report_files(self, runner, dumps_dir, corpus_dir, tmp_path):
        out = tmp_path / "rriqa.csv"
        result = runner.invoke(main, [
            "--seed", "3", "rriqa", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--splits", "10", "--train-fraction", "0.4", "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "database,network,layer,dist_kind,stat,srocc,plcc"
        assert len(lines) == 3  # median + mean rows
        payload = json.loads(out.with_suffix(".json").read_text())
        assert payload["reports"][0]["splits"] == 10

    def test_kind_filter(self, runner, dumps_dir, corpus_dir, tmp_path):
        out = tmp_path / "rriqa_awgn.csv"
        result = runner.invoke(main, [
            "rriqa", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--splits", "5", "--train-fraction", "0.4", "--kind", "awgn",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert ",awgn," in out.read_text()

    def test_degenerate_split_fails(self, runner, dumps_dir, corpus_dir, tmp_path):
        result = runner.invoke(main, [
            "rriqa", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--splits", "2", "--train-fraction", "0.8",  # 1 test ref of 3
            "--out", str(tmp_path / "x.csv")])
        assert result.exit_code == 14


class TestRecognizeCommand:
    def test_accuracy_and_confusions(self, runner, dumps_dir, corpus_dir, tmp_path):
        prefix = tmp_path / "rec"
        result = runner.invoke(main, [
            "recognize", "--dump", str(dumps_dir / "squeezenet11_fire4.dfeat"),
            "--manifest", str(corpus_dir / "manifest.csv"), "--task", "type",
            "--k", "1,3", "--splits", "6", "--train-fraction", "0.67",
            "--out-prefix", str(prefix)])
        assert result.exit_code == 0, result.output
        acc_lines = [l for l in (tmp_path / "rec_accuracy.csv").read_text().splitlines()
                     if not l.startswith("#")]
        assert acc_lines[0] == "database,network,layer,task,k,mean_accuracy"
        assert len(acc_lines) == 3
        cm = (tmp_path / "rec_confusion_k3.csv").read_text()
        assert cm.splitlines()[1].startswith("true\\pred") or \
            "true\\pred" in cm.splitlines()[0] or "true\\pred" in cm.splitlines()[1]
        assert (tmp_path / "rec_confusion_k3_normalized.csv").exists()


class TestPipelineAndReport:
    def test_full_pipeline_from_config(self, runner, refs_dir, tmp_path):
        work = tmp_path / "work"
        cfg = {
            "work_dir": str(work),
            "seed": 5,
            "distort": {"refs": str(refs_dir)},
            "extract": {"models": [{"path": str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
                                    "layers": "conv1,fire4"}]},
            "dsi": {},
            "pca_sweep": {"dump": "squeezenet11_fire4.dfeat", "dims": "2,16,full"},
            "rriqa": {"dumps": ["squeezenet11_fire4.dfeat"], "splits": 4,
                      "train_fraction": 0.4},
            "recognize": {"dumps": ["squeezenet11_fire4.dfeat"], "tasks": ["type"],
                          "k": [3], "splits": 4, "train_fraction": 0.67},
            "report": {},
        }
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        result = runner.invoke(main, ["--config", str(cfg_path), "pipeline"])
        assert result.exit_code == 0, result.output
        assert (work / "reports" / "dsi.csv").exists()
        assert (work / "reports" / "pca_sweep.csv").exists()
        assert (work / "reports" / "summary.md").exists()
        summary = (work / "reports" / "summary.md").read_text()
        assert "| squeezenet11 |" in summary

    def test_toml_config(self, runner, refs_dir, tmp_path):
        work = tmp_path / "workt"
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text(
            f'work_dir = "{work}"\nseed = 5\n\n[distort]\nrefs = "{refs_dir}"\n')
        result = runner.invoke(main, ["--config", str(cfg_path), "pipeline"])
        assert result.exit_code == 0, result.output
        assert (work / "corpus" / "manifest.csv").exists()

    def test_zero_stage_config_rejected(self, runner, tmp_path):
        cfg_path = tmp_path / "empty.json"
        cfg_path.write_text(json.dumps({"work_dir": str(tmp_path)}))
        result = runner.invoke(main, ["--config", str(cfg_path), "pipeline"])
        assert result.exit_code == 2

    def test_pipeline_without_config_rejected(self, runner):
        result = runner.invoke(main, ["pipeline"])
        assert result.exit_code == 2

    def test_report_flags_noncomparable_tables(self, runner, dumps_dir, tmp_path):
        inputs = tmp_path / "inputs"
        inputs.mkdir()
        r1 = runner.invoke(main, ["dsi", "--dumps", str(dumps_dir),
                                  "--out", str(inputs / "a.csv")])
        assert r1.exit_code == 0
        # second table normalized over a single-dump directory -> different set
        solo = tmp_path / "solo"
        solo.mkdir()
        shutil.copy(dumps_dir / "squeezenet11_fire4.dfeat", solo / "squeezenet11_fire4.dfeat")
        shutil.copy(dumps_dir / "squeezenet11_conv1.dfeat", solo / "squeezenet11_conv1.dfeat")
        # rename network in one table by editing its JSON afterwards
        r2 = runner.invoke(main, ["dsi", "--dumps", str(solo), "--out", str(inputs / "b.csv")])
        assert r2.exit_code == 0
        payload = json.loads((inputs / "b.json").read_text())
        payload["normalization_set"] = [["othernet", "conv9"], ["othernet", "conv10"]]
        (inputs / "b.json").write_text(json.dumps(payload))
        result = runner.invoke(main, ["report", "--inputs", str(inputs),
                                      "--out", str(tmp_path / "summary.md")])
        assert result.exit_code == 0, result.output
        assert "NOT comparable" in (tmp_path / "summary.md").read_text()

    def test_report_empty_dir_fails(self, runner, tmp_path):
        empty = tmp_path / "noinputs"
        empty.mkdir()
        result = runner.invoke(main, ["report", "--inputs", str(empty),
                                      "--out", str(tmp_path / "s.md")])
        assert result.exit_code == 16


class TestInstalledEntryPoint:
    def test_console_script_runs(self, refs_dir, tmp_path):
        import subprocess
        out = tmp_path / "corpus"
        result = subprocess.run(
            ["deepsep", "--seed", "5", "distort", "--refs", str(refs_dir),
             "--out", str(out)],
            capture_output=True, text=True)
        assert result.returncode == 0, result.stderr
        manifest_text = (out / "manifest.csv").read_text()
        assert manifest_text.startswith("# deepsep=")
        assert len(Manifest.load(out / "manifest.csv")) == 5 * 28
