import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from speedcluster.cli import main

TINY = ["--bucket-minutes", "315"]  # 32-bucket weeks keep CLI tests quick


@pytest.fixture
def runner():
    return CliRunner()


def _synth(runner, out_dir, extra=()):
    result = runner.invoke(main, [
        "synth", "--out-dir", str(out_dir), "--seed", "5", "--streets", "6", *TINY, *extra,
    ])
    assert result.exit_code == 0, result.output
    return out_dir


def _chain(runner, root, threads):
    """synth -> ingest -> cluster -> impute -> colorify with a thread cap."""
    t = ["--threads", str(threads)]
    synth_dir = _synth(runner, root / "synth", extra=t)
    ing = root / "ing"
    result = runner.invoke(main, [
        "ingest", "--input", str(synth_dir / "records.csv"),
        "--attrs", str(synth_dir / "attributes.csv"),
        "--out-dir", str(ing), *TINY, *t,
    ])
    assert result.exit_code == 0, result.output
    clus = root / "clus"
    result = runner.invoke(main, [
        "cluster", "--input", str(ing / "snapshot.csv"), "--k", "3",
        "--seed", "7", "--out-dir", str(clus), *t,
    ])
    assert result.exit_code == 0, result.output
    imp = root / "imp"
    result = runner.invoke(main, [
        "impute", "--input", str(ing / "snapshot.csv"),
        "--model", str(clus / "model.json"), "--out-dir", str(imp), *t,
    ])
    assert result.exit_code == 0, result.output
    col = root / "col"
    result = runner.invoke(main, [
        "colorify", "--input", str(imp / "imputed_snapshot.csv"),
        "--attrs", str(synth_dir / "attributes.csv"),
        "--imputed-cells", str(imp / "imputed_cells.csv"),
        "--out-dir", str(col), "--tile-bucket", "4", *t,
    ])
    assert result.exit_code == 0, result.output
    return root


def _file_bytes(root):
    out = {}
    for path in sorted(Path(root).rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


class TestDtwCommand:
    def test_worked_pair_prints_79(self, runner):
        result = runner.invoke(main, [
            "dtw", "--a", "65,83,65,70,66,81,71,65", "--b", "49,69,63,90",
        ])
        assert result.exit_code == 0
        assert result.output.strip() == "79.0"

    def test_na_tokens_are_dropped(self, runner):
        result = runner.invoke(main, [
            "dtw", "--a", "65,83,65,70,66,81,71,65", "--b", "49,69,NA,NA,63,NA,90,NA",
        ])
        assert result.output.strip() == "79.0"

    def test_file_input(self, runner, tmp_path):
        a = tmp_path / "a.txt"
        a.write_text("65,83,65,70,66,81,71,65\n")
        b = tmp_path / "b.txt"
        b.write_text("49\n69\n63\n90\n")
        result = runner.invoke(main, [
            "dtw", "--a-file", str(a), "--b-file", str(b),
        ])
        assert result.output.strip() == "79.0"

    def test_missing_series_is_usage_error(self, runner):
        result = runner.invoke(main, ["dtw", "--a", "1,2,3"])
        assert result.exit_code == 2

    def test_empty_series_is_precondition_error(self, runner):
        result = runner.invoke(main, ["dtw", "--a", "1,2", "--b", "NA"])
        assert result.exit_code == 4


class TestSynthAndManifests:
    def test_outputs_and_manifest_digests(self, runner, tmp_path):
        out = _synth(runner, tmp_path / "synth")
        for name in ("records.csv", "attributes.csv", "labels.csv", "manifest.json"):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert set(manifest["outputs"]) == {"records.csv", "attributes.csv", "labels.csv"}
        for digest in manifest["outputs"].values():
            assert len(digest) == 64

    def test_bad_bucket_minutes_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, [
            "synth", "--out-dir", str(tmp_path), "--bucket-minutes", "13",
        ])
        assert result.exit_code == 2


class TestExitCodes:
    def test_malformed_records_exit_3(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("street_id,bucket_index,speed_kmh\ns,0,fast\n")
        result = runner.invoke(main, [
            "ingest", "--input", str(bad), "--out-dir", str(tmp_path / "out"), *TINY,
        ])
        assert result.exit_code == 3

    def test_k_exceeding_streets_exit_4(self, runner, tmp_path):
        synth_dir = _synth(runner, tmp_path / "synth")
        ing = tmp_path / "ing"
        runner.invoke(main, [
            "ingest", "--input", str(synth_dir / "records.csv"),
            "--out-dir", str(ing), *TINY,
        ])
        result = runner.invoke(main, [
            "cluster", "--input", str(ing / "snapshot.csv"), "--k", "999",
            "--out-dir", str(tmp_path / "clus"),
        ])
        assert result.exit_code == 4

    def test_missing_input_file_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, [
            "cluster", "--input", str(tmp_path / "nope.csv"),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert result.exit_code == 2

    def test_bad_thresholds_usage_error(self, runner, tmp_path):
        synth_dir = _synth(runner, tmp_path / "synth")
        result = runner.invoke(main, [
            "colorify", "--input", str(synth_dir / "records.csv"),
            "--out-dir", str(tmp_path / "col"), "--thresholds", "nonsense",
        ])
        assert result.exit_code == 2


class TestElbowCommand:
    def test_curve_rows_and_chosen_k(self, runner, tmp_path):
        synth_dir = _synth(runner, tmp_path / "synth")
        ing = tmp_path / "ing"
        runner.invoke(main, [
            "ingest", "--input", str(synth_dir / "records.csv"),
            "--out-dir", str(ing), *TINY,
        ])
        elb = tmp_path / "elb"
        result = runner.invoke(main, [
            "elbow", "--input", str(ing / "snapshot.csv"), "--k", "1..6",
            "--seed", "3", "--out-dir", str(elb),
        ])
        assert result.exit_code == 0, result.output
        with open(elb / "elbow_curve.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["k", "inertia"]
        assert len(rows) == 7
        manifest = json.loads((elb / "manifest.json").read_text())
        assert manifest["results"]["chosen_k"] == 3
        assert "chosen_k=3" in result.output


class TestImportantRoadsCommand:
    def test_table_layout_and_selection(self, runner, tmp_path):
        synth_dir = tmp_path / "synth"
        result = runner.invoke(main, [
            "synth", "--out-dir", str(synth_dir), "--seed", "2",
            "--scenario", "important-roads", "--n-primary", "4",
            "--n-secondary", "12", "--n-planted", "4", *TINY,
        ])
        assert result.exit_code == 0, result.output
        ing = tmp_path / "ing"
        result = runner.invoke(main, [
            "ingest", "--input", str(synth_dir / "records.csv"),
            "--attrs", str(synth_dir / "attributes.csv"),
            "--out-dir", str(ing), *TINY,
        ])
        assert result.exit_code == 0, result.output
        imp = tmp_path / "imp"
        result = runner.invoke(main, [
            "important-roads", "--input", str(ing / "snapshot.csv"),
            "--attrs", str(synth_dir / "attributes.csv"),
            "--k", "3", "--seed", "1", "--compare-k", "4",
            "--out-dir", str(imp),
        ])
        assert result.exit_code == 0, result.output
        with open(imp / "important_roads.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["road_class", "filling_rate_pct", "street_id", "name", "county"]
        assert all(row[0] == "secondary" for row in rows[1:])
        doc = json.loads((imp / "importance.json").read_text())
        assert doc["selected_cluster"] == int(
            min(range(len(doc["cluster_distances"])),
                key=lambda i: doc["cluster_distances"][i])
        )
        assert doc["comparison"]["k"] == 4
        assert "elbow" in doc

    def test_no_primaries_exit_4(self, runner, tmp_path):
        synth_dir = _synth(runner, tmp_path / "synth")  # default scenario: no primary
        ing = tmp_path / "ing"
        runner.invoke(main, [
            "ingest", "--input", str(synth_dir / "records.csv"),
            "--attrs", str(synth_dir / "attributes.csv"),
            "--out-dir", str(ing), *TINY,
        ])
        result = runner.invoke(main, [
            "important-roads", "--input", str(ing / "snapshot.csv"),
            "--attrs", str(synth_dir / "attributes.csv"),
            "--out-dir", str(tmp_path / "imp"),
        ])
        assert result.exit_code == 4


class TestConfigFile:
    def test_config_sets_defaults_and_flags_override(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 9, "streets": 4, "bucket-minutes": 315}))
        out1 = tmp_path / "o1"
        result = runner.invoke(main, [
            "--config", str(cfg), "synth", "--out-dir", str(out1),
        ])
        assert result.exit_code == 0, result.output
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 9
        assert manifest["config"]["streets"] == 4
        out2 = tmp_path / "o2"
        result = runner.invoke(main, [
            "--config", str(cfg), "synth", "--out-dir", str(out2), "--seed", "1",
        ])
        assert json.loads((out2 / "manifest.json").read_text())["config"]["seed"] == 1

    def test_invalid_config_exit_3(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("not json")
        result = runner.invoke(main, ["--config", str(cfg), "synth", "--out-dir", str(tmp_path)])
        assert result.exit_code == 3


class TestDeterminism:
    def test_cluster_reruns_byte_identical(self, runner, tmp_path):
        synth_dir = _synth(runner, tmp_path / "synth")
        ing = tmp_path / "ing"
        runner.invoke(main, [
            "ingest", "--input", str(synth_dir / "records.csv"),
            "--out-dir", str(ing), *TINY,
        ])
        models = []
        for name in ("c1", "c2"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "cluster", "--input", str(ing / "snapshot.csv"), "--k", "3",
                "--seed", "7", "--out-dir", str(out),
            ])
            assert result.exit_code == 0, result.output
            models.append((out / "model.json").read_bytes())
        assert models[0] == models[1]

    def test_thread_count_does_not_change_outputs(self, runner, tmp_path):
        one = _chain(runner, tmp_path / "t1", threads=1)
        two = _chain(runner, tmp_path / "t2", threads=2)
        files1 = _file_bytes(one)
        files2 = _file_bytes(two)
        assert files1.keys() == files2.keys()
        for name in files1:
            assert files1[name] == files2[name], f"{name} differs across thread counts"
