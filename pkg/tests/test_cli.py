import json

import pytest

from gasot.harness import cli

TOY = ["--n-train", "120", "--n-test", "40", "--epochs", "2", "--snrs", "30",
       "--modes", "independent", "--pls-components", "4"]


def _run(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_synth_train_eval(tmp_path, capsys):
    code, out, _ = _run(capsys, ["synth", "--out", str(tmp_path / "ds"), "--n", "150", "--snr", "30"])
    assert code == 0 and json.loads(out)["n_samples"] == 150
    assert (tmp_path / "ds" / "data.csv").exists()
    code, out, _ = _run(capsys, ["train", "--data", str(tmp_path / "ds"), "--model", "fnn_ot",
                                 "--out", str(tmp_path / "m.json"), "--epochs", "2"])
    assert code == 0 and json.loads(out)["kind"] == "fnn_ot"
    code, out, _ = _run(capsys, ["eval", "--model", str(tmp_path / "m.json"), "--data", str(tmp_path / "ds"),
                                 "--out", str(tmp_path / "e.json")])
    res = json.loads(out)
    assert code == 0 and 0 <= res["metrics"]["micro_f1"] <= 1
    assert json.loads((tmp_path / "e.json").read_text()) == res


def test_experiment_with_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_train": 120, "n_test": 40, "snrs": [30], "modes": ["independent"],
                               "roster": ["fnn_fixed", "pls_br"], "pls_components": 4,
                               "train": {"epochs": 2}, "seed": 5}))
    out_dir = tmp_path / "run"
    code, out, _ = _run(capsys, ["experiment", "--config", str(cfg), "--seed", "6", "--out-dir", str(out_dir)])
    res = json.loads(out)
    assert code == 0 and res["cells"] == 2 and res["failed"] == 0
    saved = json.loads((out_dir / "report.json").read_text())
    assert saved["config"]["seed"] == 6 and saved["config"]["n_train"] == 120
    assert (out_dir / "plots" / "prf_independent.svg").exists()


def test_grid_and_curve(tmp_path, capsys):
    code, out, _ = _run(capsys, ["grid", *TOY, "--grid-p1", "1", "--grid-p2", "0.5,1",
                                 "--out", str(tmp_path / "g.json")])
    assert code == 0 and len(json.loads(out)["rows"]) == 2
    code, out, _ = _run(capsys, ["curve", *TOY, "--curve-sizes", "40,120"])
    assert code == 0 and len(json.loads(out)["series"]["pls_br"]) == 2


def test_library_csv_flag(tmp_path, capsys):
    from gasot.gaslib import WavelengthGrid, generate_fixture_library, save_library
    save_library(generate_fixture_library(3, 9, WavelengthGrid.uniform(1, 7, 40)), tmp_path / "lib.csv")
    code, out, _ = _run(capsys, ["synth", "--out", str(tmp_path / "ds"), "--n", "20",
                                 "--library-csv", str(tmp_path / "lib.csv")])
    assert code == 0
    man = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert man["library"]["kind"] == "csv" and man["n_pixels"] == 40


def test_failures_emit_error_json(tmp_path, capsys):
    code, _, err = _run(capsys, ["eval", "--model", str(tmp_path / "none.json"), "--data", str(tmp_path)])
    assert code == 1 and json.loads(err)["type"] == "FileNotFoundError"
    code, _, err = _run(capsys, ["experiment", "--modes", "sideways"])
    assert code == 1 and "modes" in json.loads(err)["error"]
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--model", "svm"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err)["type"] == "UsageError"
