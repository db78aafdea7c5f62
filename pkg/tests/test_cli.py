import json

import numpy as np
import pytest

from broadsound import fvec
from broadsound import dataset as ds
from broadsound.cli import main
from broadsound.taxonomy import Level


@pytest.fixture()
def data_dir(tmp_path, taxonomy):
    """Small clustered dataset: manifest + clap feature files, unsplit."""
    rng = np.random.default_rng(0)
    codes = taxonomy.codes(Level.SECOND)
    records = []
    feat_dir = tmp_path / "features" / "clap"
    feat_dir.mkdir(parents=True)
    for ci, code in enumerate(codes):
        centroid = np.zeros(512)
        centroid[ci] = 10.0
        for i in range(6):
            sid = f"{code}-{i}"
            records.append(ds.SoundRecord(sound_id=sid, second_label=code, duration_s=1.0))
            vec = centroid + rng.normal(scale=0.5, size=512)
            fvec.write(feat_dir / f"{sid}.fvec", vec[None, :].astype(np.float32))
    manifest = ds.DatasetManifest(records=records, feature_set_ids=["clap"])
    ds.write_manifest(manifest, tmp_path / "unsplit.jsonl")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


class TestSplitCommand:
    def test_split_writes_manifest_and_meta(self, data_dir, capsys):
        rc = run("split", "--manifest", data_dir / "unsplit.jsonl",
                 "--per-class", 2, "--seed", 7, "--out", data_dir)
        assert rc == 0
        assert "46 eval" in capsys.readouterr().out
        manifest = ds.read_manifest(data_dir / "manifest.jsonl")
        assert len(manifest.subset(ds.Split.EVAL)) == 46
        meta = json.loads((data_dir / "run_meta.json").read_text())
        assert meta["seed"] == 7
        assert meta["command"] == "split"

    def test_rerun_is_byte_identical(self, data_dir, tmp_path):
        for out in ("a", "b"):
            rc = run("--stable-output", "split", "--manifest",
                     data_dir / "unsplit.jsonl", "--per-class", 2, "--seed", 3,
                     "--out", tmp_path / out)
            assert rc == 0
        for name in ("manifest.jsonl", "run_meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_insufficient_records_is_data_error(self, data_dir):
        rc = run("split", "--manifest", data_dir / "unsplit.jsonl",
                 "--per-class", 50, "--out", data_dir / "x")
        assert rc == 1

    def test_config_file_overrides_flags(self, data_dir, tmp_path):
        config = tmp_path / "cfg.yaml"
        config.write_text("per_class: 1\nseed: 9\n")
        rc = run("--config", config, "split", "--manifest", data_dir / "unsplit.jsonl",
                 "--per-class", 2, "--out", tmp_path / "out")
        assert rc == 0
        manifest = ds.read_manifest(tmp_path / "out" / "manifest.jsonl")
        assert len(manifest.subset(ds.Split.EVAL)) == 23

    def test_unknown_config_key_is_usage_error(self, data_dir, tmp_path):
        config = tmp_path / "cfg.yaml"
        config.write_text("per_klass: 1\n")
        with pytest.raises(SystemExit) as exc_info:
            run("--config", config, "split", "--manifest", data_dir / "unsplit.jsonl",
                "--out", tmp_path / "out")
        assert exc_info.value.code == 2


class TestGridCommand:
    def test_grid_produces_reports_and_model(self, data_dir, capsys):
        run("split", "--manifest", data_dir / "unsplit.jsonl", "--per-class", 2,
            "--seed", 1, "--out", data_dir)
        out = data_dir / "grid"
        rc = run("grid", "--manifest", data_dir / "manifest.jsonl", "--kind", "clap",
                 "--level", "second", "--k-values", "1,3", "--out", out)
        assert rc == 0
        report = json.loads((out / "grid_report.json").read_text())
        assert len(report["rows"]) == 2 * 3 * 2
        assert report["rows"][0]["accuracy"] >= 0.9  # separable clusters
        assert (out / "best_model.bsdk").exists()
        eval_report = json.loads((out / "report.json").read_text())
        assert eval_report["accuracy"] >= 0.9
        assert (out / "confusion.csv").read_text().startswith(",")

    def test_same_split_for_both_levels(self, data_dir):
        run("split", "--manifest", data_dir / "unsplit.jsonl", "--per-class", 2,
            "--seed", 1, "--out", data_dir)
        for level in ("second", "top"):
            rc = run("grid", "--manifest", data_dir / "manifest.jsonl", "--kind", "clap",
                     "--level", level, "--k-values", "1", "--metrics", "euclidean",
                     "--out", data_dir / f"grid-{level}")
            assert rc == 0
        second = json.loads((data_dir / "grid-second" / "report.json").read_text())
        top = json.loads((data_dir / "grid-top" / "report.json").read_text())
        assert len(second["class_order"]) == 23
        assert len(top["class_order"]) == 5
        assert top["accuracy"] >= second["accuracy"]


class TestEvalCommand:
    def test_identical_pred_truth_files_give_accuracy_one(self, tmp_path, capsys):
        labels = tmp_path / "labels.txt"
        labels.write_text("animals\nvehicles\nconversation-crowd\n")
        rc = run("eval", "--pred", labels, "--truth", labels, "--out", tmp_path / "out")
        assert rc == 0
        assert "accuracy=1.0000" in capsys.readouterr().out
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["accuracy"] == 1.0

    def test_eval_with_model(self, data_dir):
        run("split", "--manifest", data_dir / "unsplit.jsonl", "--per-class", 2,
            "--seed", 1, "--out", data_dir)
        run("grid", "--manifest", data_dir / "manifest.jsonl", "--kind", "clap",
            "--k-values", "1", "--metrics", "euclidean", "--out", data_dir / "grid")
        rc = run("eval", "--model", data_dir / "grid" / "best_model.bsdk",
                 "--manifest", data_dir / "manifest.jsonl", "--kind", "clap",
                 "--out", data_dir / "eval")
        assert rc == 0
        report = json.loads((data_dir / "eval" / "report.json").read_text())
        assert report["accuracy"] >= 0.9

    def test_missing_inputs_is_data_error(self, tmp_path):
        assert run("eval", "--out", tmp_path / "out") == 1


class TestExportCommand:
    def test_export_errors_from_report(self, tmp_path, taxonomy):
        report = {
            "misclassified": [
                {"sound_id": f"s{i}", "true_code": "animals", "predicted_code": "vehicles"}
                for i in range(10)
            ]
        }
        report_path = tmp_path / "report.json"
        report_path.write_text(json.dumps(report))
        out = tmp_path / "queue.jsonl"
        rc = run("export-errors", "--report", report_path, "--sample", 4,
                 "--seed", 5, "--out", out)
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 4

    def test_export_all(self, tmp_path):
        report_path = tmp_path / "report.json"
        report_path.write_text(json.dumps({"misclassified": [
            {"sound_id": "a", "true_code": "x", "predicted_code": "y"}
        ]}))
        out = tmp_path / "queue.jsonl"
        assert run("export-errors", "--report", report_path, "--out", out) == 0
        assert len(out.read_text().strip().splitlines()) == 1


class TestDataRoot:
    def test_env_var_resolves_relative_inputs(self, data_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("BROADSOUND_DATA_ROOT", str(data_dir))
        rc = run("split", "--manifest", "unsplit.jsonl", "--per-class", 1,
                 "--out", tmp_path / "out")
        assert rc == 0


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc_info:
            run("frobnicate")
        assert exc_info.value.code == 2

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc_info:
            run("split")
        assert exc_info.value.code == 2
