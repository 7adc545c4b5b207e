import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

import czsl
from czsl.cli import entrypoint
from czsl.data import save_dataset
from czsl.runner import run_experiment, sweep_alpha

from conftest import toy_experiment_config


@pytest.fixture(scope="module")
def tiny_bundle():
    # 4 classes x 2 tasks keeps the end-to-end tests fast
    return czsl.make_synthetic_bundle(4, 30, 6, 2, seed=200, num_seen=2)


def tiny_config(output_dir, setting="fixed", seed=0, alpha=0.5):
    cfg = toy_experiment_config(alpha, seed, output_dir, setting=setting)
    cfg.train.epochs = 8
    cfg.train.samples_per_class = 40
    cfg.classifier = dataclasses.replace(cfg.classifier, epochs=10)
    if setting == "dynamic":
        cfg.seen_unseen_per_task = [[1, 1]] * 2
    return cfg


EXPECTED_FILES = ["manifest.json", "losses.jsonl", "ledger.json",
                  "metrics.json", "report.csv", "config.yaml",
                  "harmonic_by_task.png", "accuracy_by_task.png"]


class TestRunExperiment:
    def test_fixed_run_artifacts(self, tiny_bundle, tmp_path):
        cfg = tiny_config(tmp_path / "run")
        result = run_experiment(cfg, bundle=tiny_bundle)
        out = result.output_dir
        for name in EXPECTED_FILES:
            assert (out / name).exists(), name
        assert sorted(p.name for p in (out / "checkpoints").iterdir()) == \
            ["task_01.npz", "task_02.npz"]
        assert sorted(p.name for p in (out / "classifiers").iterdir()) == \
            ["task_01.npz", "task_02.npz"]
        assert result.tracker.peak_full == 1
        assert result.tracker.peak_decoders == 1

    def test_dynamic_run(self, tiny_bundle, tmp_path):
        cfg = tiny_config(tmp_path / "dyn", setting="dynamic")
        result = run_experiment(cfg, bundle=tiny_bundle)
        doc = json.loads((result.output_dir / "metrics.json").read_text())
        # dynamic evaluation reports unseen accuracy for every task
        assert all(row["unseen_acc"] is not None for row in doc["per_task"])
        assert 0.0 <= doc["mH"] <= 1.0

    def test_same_seed_reports_byte_identical(self, tiny_bundle, tmp_path):
        out_a = run_experiment(tiny_config(tmp_path / "a", seed=3),
                               bundle=tiny_bundle, figures=False).output_dir
        out_b = run_experiment(tiny_config(tmp_path / "b", seed=3),
                               bundle=tiny_bundle, figures=False).output_dir
        for name in ("metrics.json", "ledger.json", "report.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_different_seeds_differ(self, tiny_bundle, tmp_path):
        out_a = run_experiment(tiny_config(tmp_path / "a", seed=1),
                               bundle=tiny_bundle, figures=False).output_dir
        out_b = run_experiment(tiny_config(tmp_path / "b", seed=2),
                               bundle=tiny_bundle, figures=False).output_dir
        assert (out_a / "ledger.json").read_bytes() != \
            (out_b / "ledger.json").read_bytes()

    def test_losses_log_shape(self, tiny_bundle, tmp_path):
        cfg = tiny_config(tmp_path / "log")
        run_experiment(cfg, bundle=tiny_bundle, figures=False)
        rows = [json.loads(line) for line in
                (tmp_path / "log" / "losses.jsonl").read_text().splitlines()]
        assert len(rows) == 2 * cfg.train.epochs
        assert {r["task"] for r in rows} == {1, 2}


class TestSweepAlpha:
    def test_artifacts(self, tiny_bundle, tmp_path):
        cfg = tiny_config(tmp_path / "sweep")
        results = sweep_alpha(cfg, [0.2, 0.8], bundle=tiny_bundle)
        assert set(results) == {0.2, 0.8}
        base = tmp_path / "sweep"
        assert (base / "alpha_sweep.csv").exists()
        assert (base / "alpha_sweep.png").exists()
        for alpha in ("0.2", "0.8"):
            assert (base / f"alpha_{alpha}" / "metrics.json").exists()
        header = (base / "alpha_sweep.csv").read_text().splitlines()[0]
        assert header == "alpha,mSA,mUA,mH"


class TestCli:
    def dataset_file(self, tmp_path):
        path = tmp_path / "toy.bin"
        save_dataset(path, czsl.make_synthetic_bundle(4, 20, 4, 2, seed=7))
        return path

    def split_config(self, tmp_path, data, output_dir):
        from czsl.config import ExperimentConfig, dump_config
        cfg = ExperimentConfig(dataset_path=str(data), setting="fixed",
                               output_dir=str(output_dir), classes_per_task=2)
        path = tmp_path / "split.yaml"
        dump_config(cfg, path)
        return path

    def test_synth_data_then_split(self, tmp_path):
        data = tmp_path / "d.bin"
        assert entrypoint(["synth-data", "--out", str(data), "--classes", "4",
                           "--samples-per-class", "10", "--feature-dim", "4",
                           "--attribute-dim", "2"]) == 0
        out = tmp_path / "split"
        cfg_path = self.split_config(tmp_path, data, out)
        assert entrypoint(["split", "--config", str(cfg_path)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["setting"] == "fixed"

    def test_run_with_config_file(self, tmp_path):
        from czsl.config import dump_config
        data = self.dataset_file(tmp_path)
        cfg = tiny_config(tmp_path / "run")
        cfg.classes_per_task = 2
        cfg.dataset_path = str(data)
        cfg.train.epochs = 4
        cfg_path = tmp_path / "cfg.yaml"
        dump_config(cfg, cfg_path)
        assert entrypoint(["run", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "run" / "report.csv").exists()
        assert (tmp_path / "run" / "harmonic_by_task.png").exists()

    def test_train_then_eval(self, tmp_path):
        from czsl.config import dump_config
        data = self.dataset_file(tmp_path)
        cfg = tiny_config(tmp_path / "te")
        cfg.classes_per_task = 2
        cfg.dataset_path = str(data)
        cfg.train.epochs = 4
        cfg_path = tmp_path / "cfg.yaml"
        dump_config(cfg, cfg_path)
        assert entrypoint(["train", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "te" / "checkpoints" / "task_02.npz").exists()
        assert not (tmp_path / "te" / "metrics.json").exists()
        assert entrypoint(["eval", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "te" / "metrics.json").exists()

    def test_missing_dataset_exit_code(self, tmp_path):
        code = entrypoint(["run", "--dataset-path",
                           str(tmp_path / "missing.bin"),
                           "--output-dir", str(tmp_path / "o")])
        assert code == 3

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("alpha: 7.0\n")
        assert entrypoint(["run", "--config", str(bad)]) == 2

    def test_env_output_dir_override(self, tmp_path, monkeypatch):
        data = self.dataset_file(tmp_path)
        target = tmp_path / "env_out"
        cfg_path = self.split_config(tmp_path, data, tmp_path / "ignored")
        monkeypatch.setenv("CZSL_OUTPUT_DIR", str(target))
        assert entrypoint(["split", "--config", str(cfg_path)]) == 0
        assert (target / "manifest.json").exists()
