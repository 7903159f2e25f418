import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest


def run_cli(*args, check=True):
    proc = subprocess.run(
        [sys.executable, "-m", "dynens", *map(str, args)],
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"dynens {' '.join(map(str, args))} failed:\n{proc.stderr}")
    return proc


WORLD_SPEC = {
    "world": {
        "num_classes": 4,
        "n_train": 150,
        "n_val": 120,
        "n_test": 250,
        "class_priors": [0.25, 0.25, 0.25, 0.25],
        "rho": 0.2,
        "seed": 11,
    },
    "models": [
        {"name": "small", "param_count": 174420, "a0": 0.5, "a_inf": 0.9,
         "tau": 4, "gamma": 0.7, "kappa": 0.3},
        {"name": "mid", "param_count": 402308, "a0": 0.45, "a_inf": 0.86,
         "tau": 5, "gamma": 0.7, "kappa": 0.3},
        {"name": "large", "param_count": 417284, "a0": 0.55, "a_inf": 0.92,
         "tau": 4, "gamma": 0.7, "kappa": 0.3},
    ],
    "epochs": 6,
}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec_path = root / "world.json"
    spec_path.write_text(json.dumps(WORLD_SPEC))
    bundle = root / "bundle"
    run_cli("simulate", "--config", spec_path, "--out", bundle)
    return root, spec_path, bundle


def read_labels(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        assert next(reader) == ["label"]
        return np.array([int(r[0]) for r in reader])


class TestPipeline:
    def test_train_writes_full_trajectory(self, pipeline):
        root, _, bundle = pipeline
        out = root / "w.json"
        run_cli("train", "--bundle", bundle, "--out", out)
        payload = json.loads(out.read_text())
        assert len(payload["trajectory"]) == WORLD_SPEC["epochs"]
        assert set(payload["final_weights"]) == {"small", "mid", "large"}
        assert payload["trajectory"][0]["applied"] is False

    def test_infer_then_eval_agree(self, pipeline):
        root, _, bundle = pipeline
        w = root / "w2.json"
        run_cli("train", "--bundle", bundle, "--out", w)
        labels_path = root / "pred.csv"
        run_cli("infer", "--bundle", bundle, "--weights", w, "--out", labels_path)
        report_path = root / "rep.json"
        run_cli("eval", "--bundle", bundle, "--weights", w, "--out", report_path)
        predicted = read_labels(labels_path)
        truth = read_labels(bundle / "labels_test.csv")
        report = json.loads(report_path.read_text())
        assert report["classification"]["accuracy"] == pytest.approx(
            float((predicted == truth).mean())
        )
        cm = np.array(report["confusion_matrix"])
        assert cm.sum() == truth.size

    def test_static_mode_equals_mean_softmax(self, pipeline):
        root, _, bundle = pipeline
        out = root / "static_pred.csv"
        run_cli("infer", "--bundle", bundle, "--mode", "static", "--out", out)
        stack = []
        for name in ("small", "mid", "large"):
            with open(bundle / "models" / name / "preds_test.csv", newline="") as fh:
                reader = csv.reader(fh)
                next(reader)
                stack.append([[float(v) for v in row] for row in reader])
        mean_labels = np.mean(np.array(stack), axis=0).argmax(axis=1)
        np.testing.assert_array_equal(read_labels(out), mean_labels)

    def test_model_subset_flag(self, pipeline):
        root, _, bundle = pipeline
        out = root / "subset.json"
        run_cli("eval", "--bundle", bundle, "--models", "small,large", "--out", out)
        payload = json.loads(out.read_text())
        assert payload["models"] == ["small", "large"]

    def test_config_file_with_flag_override(self, pipeline):
        root, _, bundle = pipeline
        cfg = root / "cfg.json"
        cfg.write_text(json.dumps({"delta": 0.25, "acc_source": "train"}))
        out = root / "cfg_eval.json"
        run_cli("eval", "--bundle", bundle, "--config", cfg, "--delta", "0.4", "--out", out)
        echo = json.loads(out.read_text())["config"]
        assert echo["delta"] == 0.4  # flag wins
        assert echo["acc_source"] == "train"  # file value survives
        assert echo["lambda_init"] == 0.5  # default fills the rest

    def test_ablate_and_bench_outputs(self, pipeline):
        root, _, bundle = pipeline
        abl = root / "abl"
        run_cli("ablate", "--bundle", bundle, "--out", abl, "--num-seeds", "3")
        table = (abl / "ablation.csv").read_text().splitlines()
        assert table[0] == "name,mean_accuracy,p_value,reference"
        assert len(table) == 6  # full + 3 pairs + static
        payload = json.loads((abl / "ablation.json").read_text())
        assert payload["seeds"] == [0, 1, 2]

        bench = root / "bench"
        run_cli("bench", "--bundle", bundle, "--out", bench)
        pareto = (bench / "pareto.csv").read_text().splitlines()
        assert pareto[0] == "name,accuracy,latency_ms,on_frontier"
        assert len(pareto) == 6  # 3 singles + static + dynamic
        assert not (bench / "latency.json").exists()

    def test_bench_live_measurement_optin(self, pipeline):
        root, _, bundle = pipeline
        out = root / "bench_live"
        run_cli("bench", "--bundle", bundle, "--out", out, "--reps", "6")
        stats = json.loads((out / "latency.json").read_text())["latency"]
        assert 0.0 <= stats["overhead_fraction"] < 1.0

    def test_split_command(self, pipeline, tmp_path):
        labels_path = tmp_path / "labels.csv"
        with labels_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label"])
            for v in np.repeat([0, 1, 2], [50, 30, 20]):
                writer.writerow([int(v)])
        out = tmp_path / "splits"
        run_cli("split", "--labels", labels_path, "--out", out, "--seed", "3")
        sizes = {}
        for split in ("train", "val", "test"):
            with (out / f"indices_{split}.csv").open(newline="") as fh:
                reader = csv.reader(fh)
                assert next(reader) == ["index"]
                sizes[split] = sum(1 for _ in reader)
        assert sizes == {"train": 80, "val": 10, "test": 10}


class TestErrorPaths:
    def test_missing_bundle_names_the_error(self, tmp_path):
        proc = run_cli("train", "--bundle", tmp_path / "nope", "--out",
                       tmp_path / "w.json", check=False)
        assert proc.returncode == 1
        assert "error: MissingManifest:" in proc.stderr
        assert len([l for l in proc.stderr.splitlines() if l.strip()]) == 1

    def test_unknown_model_subset(self, pipeline, tmp_path):
        _, _, bundle = pipeline
        proc = run_cli("eval", "--bundle", bundle, "--models", "ghost",
                       "--out", tmp_path / "r.json", check=False)
        assert proc.returncode == 1
        assert "KeyError" in proc.stderr

    def test_usage_error_exit_code(self):
        proc = run_cli("train", check=False)  # missing required flags
        assert proc.returncode == 2

    def test_help_on_every_subcommand(self):
        for cmd in ("simulate", "split", "train", "infer", "eval", "ablate", "bench"):
            proc = run_cli(cmd, "--help")
            assert proc.returncode == 0
            assert "--" in proc.stdout
        top = run_cli("--help")
        assert top.returncode == 0
