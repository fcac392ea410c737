import json
import re

import numpy as np
import pytest

from schrotex.cli import build_parser, main, read_features_csv
from schrotex.data import synth_texture_dataset, write_dataset
from schrotex.imageio import read_pgm, write_pgm


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    index, images = synth_texture_dataset(3, 5, 32, seed=21)
    write_dataset(root, index, images)
    return root


@pytest.fixture(scope="module")
def small_features(small_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("feat") / "f.csv"
    assert main([ "features", str(small_dataset), "--moments", "3", "--r", "2", "--t-count", "8", "--out", str(out)]) == 0
    return out


def run(*argv):
    return main([str(a) for a in argv])


class TestTransformCommand:
    def test_constant_image_spatial(self, tmp_path):
        src = tmp_path / "c.pgm"
        write_pgm(src, np.full((10, 12), 40, dtype=np.uint8))
        out = tmp_path / "o.pgm"
        assert run("transform", src, "--t", 0, "--r", 3, "--out", out) == 0
        img = read_pgm(out)
        assert img.shape == (10, 12) and np.unique(img).size == 1

    def test_demo_signal_csv(self, tmp_path):
        out = tmp_path / "demo.csv"
        assert run("transform", "--demo", "--t", 1e-5, "--r", 20, "--out", out) == 0
        values = np.loadtxt(out)
        assert values.shape == (600,) and np.all(values >= 0)

    def test_signal_csv_input(self, tmp_path):
        src = tmp_path / "s.csv"
        src.write_text("1,2,3\n4,5\n")
        out = tmp_path / "o.csv"
        assert run("transform", src, "--t", 0, "--r", 1, "--out", out) == 0
        np.testing.assert_array_equal(np.loadtxt(out), [4, 6, 9, 12, 14])

    def test_frequency_identity(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(20, 20), dtype=np.uint8)
        img[0, 0], img[0, 1] = 0, 255  # full range, so min-max scaling is the identity
        src = tmp_path / "i.pgm"
        write_pgm(src, img)
        for scaling in ("minmax", "clip"):
            out = tmp_path / f"o_{scaling}.pgm"
            assert run("transform", src, "--mode", "frequency", "--t", 0, "--scaling", scaling, "--out", out) == 0
            np.testing.assert_array_equal(read_pgm(out), img)

    def test_raw_matrix_output(self, tmp_path, rng):
        src = tmp_path / "i.pgm"
        write_pgm(src, rng.integers(0, 256, size=(5, 6), dtype=np.uint8))
        out = tmp_path / "o.csv"
        assert run("transform", src, "--t", 1e-3, "--r", 2, "--out", out) == 0
        assert np.loadtxt(out, delimiter=",").shape == (5, 6)

    def test_bad_parameters(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        assert run("transform", "--demo", "--r", 0, "--out", out) != 0
        assert "error" in capsys.readouterr().err
        assert not out.exists()
        assert run("transform", tmp_path / "missing.pgm", "--out", out) != 0


class TestFeaturesCommand:
    def test_shape(self, small_features):
        lines = small_features.read_text().splitlines()
        assert len(lines) == 1 + 15
        assert all(len(line.split(",")) == 2 + 8 * 3 for line in lines)

    def test_full_grid_width(self, tmp_path):
        root = tmp_path / "ds"
        index, images = synth_texture_dataset(2, 5, 16, seed=0)
        write_dataset(root, index, images)
        out = tmp_path / "f.csv"
        assert run("features", root, "--moments", 5, "--r", 2, "--out", out) == 0
        rows = out.read_text().splitlines()[1:]
        assert len(rows) == 10 and all(len(r.split(",")) == 502 for r in rows)

    def test_rerun_identical(self, small_dataset, small_features, tmp_path):
        again = tmp_path / "g.csv"
        assert run("features", small_dataset, "--moments", 3, "--r", 2, "--t-count", 8, "--jobs", 2, "--out", again) == 0
        assert again.read_bytes() == small_features.read_bytes()

    def test_round_trip_precision(self, small_features):
        _, _, X = read_features_csv(small_features)
        text = small_features.read_text().splitlines()[1].split(",")[2:]
        assert [float(v) for v in text] == [float(format(v, ".17g")) for v in X[0]]

    def test_empty_dataset(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        out = tmp_path / "f.csv"
        assert run("features", tmp_path / "empty", "--out", out) != 0
        assert "no images found" in capsys.readouterr().err
        assert not out.exists()

    def test_unreadable_image_aborts(self, tmp_path, capsys):
        (tmp_path / "ds" / "a").mkdir(parents=True)
        (tmp_path / "ds" / "a" / "broken.png").write_bytes(b"garbage")
        out = tmp_path / "f.csv"
        assert run("features", tmp_path / "ds", "--out", out) != 0
        assert "broken.png" in capsys.readouterr().err
        assert not out.exists()
        assert not list(tmp_path.glob(".f.csv*"))


class TestClassifyCommand:
    def test_report_files(self, small_features, tmp_path, capsys):
        report = tmp_path / "r.json"
        assert run("classify", small_features, "--folds", 5, "--seed", 3, "--out", report) == 0
        printed = capsys.readouterr().out
        assert re.search(r"\d{1,3}\.\d{2}±\d\.\d{2}", printed)
        data = json.loads(report.read_text())
        assert set(data) >= {"success_rate", "deviation", "fold_accuracies", "confusion", "params"}
        assert data["params"]["seed"] == 3
        assert np.sum(data["confusion"]) == 15
        csv_lines = (tmp_path / "r.confusion.csv").read_text().splitlines()
        assert len(csv_lines) == 4
        assert read_pgm(tmp_path / "r.confusion.pgm").shape == (3, 3)

    def test_shuffled_rows_same_report(self, small_features, tmp_path):
        lines = small_features.read_text().splitlines()
        rng = np.random.default_rng(0)
        body = [lines[i] for i in rng.permutation(np.arange(1, len(lines)))]
        shuffled = tmp_path / "s.csv"
        shuffled.write_text("\n".join([lines[0]] + body) + "\n")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run("classify", small_features, "--folds", 5, "--out", a) == 0
        assert run("classify", shuffled, "--folds", 5, "--out", b) == 0
        ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
        ja["params"].pop("features")
        jb["params"].pop("features")
        assert ja == jb

    def test_too_many_folds(self, small_features, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert run("classify", small_features, "--folds", 100, "--out", out) != 0
        assert "k must" in capsys.readouterr().err
        assert not out.exists()

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("path,label,v1\na.pgm,x,1.0\nb.pgm,y\n")
        assert run("classify", bad, "--out", tmp_path / "r.json") != 0
        bad.write_text("path,label,v1\na.pgm,x,abc\n")
        assert run("classify", bad, "--out", tmp_path / "r.json") != 0

    def test_config_file_and_override(self, small_features, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"folds": 3, "seed": 9, "out": str(tmp_path / "from_cfg.json")}))
        assert run("classify", small_features, "--config", cfg) == 0
        data = json.loads((tmp_path / "from_cfg.json").read_text())
        assert data["params"]["k"] == 3 and data["params"]["seed"] == 9
        assert run("classify", small_features, "--config", cfg, "--seed", 4) == 0
        assert json.loads((tmp_path / "from_cfg.json").read_text())["params"]["seed"] == 4

    def test_config_unknown_key(self, small_features, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"colour": "blue"}))
        assert run("classify", small_features, "--config", cfg, "--out", tmp_path / "r.json") != 0


class TestGridCommand:
    def test_default_grid_shape(self, tmp_path):
        root = tmp_path / "ds"
        index, images = synth_texture_dataset(2, 4, 16, seed=2)
        write_dataset(root, index, images)
        out = tmp_path / "grid.csv"
        assert run("grid", root, "--t-count", 3, "--folds", 2, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "r,M=5,M=10,M=15,M=20"
        assert [int(line.split(",")[0]) for line in lines[1:]] == list(range(2, 21, 2))
        assert all(len(line.split(",")) == 5 for line in lines[1:])

    def test_sorted_by_r(self, small_dataset, tmp_path):
        out = tmp_path / "grid.csv"
        assert run("grid", small_dataset, "--r-list", "3,1,2", "--m-list", "2", "--t-count", 4, "--folds", 5, "--out", out) == 0
        assert [line.split(",")[0] for line in out.read_text().splitlines()[1:]] == ["1", "2", "3"]

    def test_single_cell_matches_classify(self, small_dataset, small_features, tmp_path):
        out = tmp_path / "grid.csv"
        assert run("grid", small_dataset, "--r-list", 2, "--m-list", 3, "--t-count", 8, "--folds", 5, "--seed", 1, "--out", out) == 0
        rate = float(out.read_text().splitlines()[1].split(",")[1])
        report = tmp_path / "r.json"
        assert run("classify", small_features, "--folds", 5, "--seed", 1, "--out", report) == 0
        assert rate == json.loads(report.read_text())["success_rate"]


class TestNoiseSweepCommand:
    def test_rows_and_zero_level(self, small_dataset, small_features, tmp_path):
        out = tmp_path / "noise.csv"
        assert run("noise-sweep", small_dataset, "--noise", "salt_pepper", "--levels", "0,0.05,0.2",
                   "--r", 2, "--moments", 3, "--t-count", 8, "--folds", 5, "--seed", 6, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "level,success_rate,deviation,noise_seed"
        assert len(lines) == 4
        assert [int(line.split(",")[3]) for line in lines[1:]] == [6 ^ 0, 6 ^ 1, 6 ^ 2]
        report = tmp_path / "clean.json"
        assert run("classify", small_features, "--folds", 5, "--seed", 6, "--out", report) == 0
        clean = json.loads(report.read_text())
        level0 = lines[1].split(",")
        assert float(level0[1]) == clean["success_rate"]
        assert float(level0[2]) == clean["deviation"]

    def test_gaussian_default_levels(self, small_dataset, tmp_path):
        out = tmp_path / "noise.csv"
        assert run("noise-sweep", small_dataset, "--noise", "gaussian", "--r", 1, "--moments", 2,
                   "--t-count", 2, "--folds", 5, "--out", out) == 0
        assert [float(line.split(",")[0]) for line in out.read_text().splitlines()[1:]] == [5, 10, 20, 40]


class TestSynthCommand:
    def test_writes_dataset(self, tmp_path):
        out = tmp_path / "syn"
        assert run("synth", "--classes", 2, "--per-class", 3, "--size", 16, "--seed", 1, "--out", out) == 0
        assert len(list(out.glob("*/*.pgm"))) == 6
        assert (out / "index.csv").read_text().splitlines()[0] == "path,label"


def test_help_lists_every_flag():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {"transform", "features", "classify", "grid", "noise-sweep", "synth"}
    texts = {name: p.format_help() for name, p in sub.items()}
    everything = " ".join(texts.values())
    for flag in ("--t", "--r", "--moments", "--bins", "--folds", "--seed", "--jobs", "--mode",
                 "--pca-variance", "--noise", "--levels", "--out", "--config"):
        assert flag in everything
    for name, p in sub.items():
        for action in p._actions:
            if action.option_strings and action.dest != "help":
                assert action.help, f"{name} {action.option_strings} lacks help"
    assert "pixels" in texts["features"] and "grey levels" in texts["noise-sweep"]
