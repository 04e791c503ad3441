import json

import numpy as np
import pytest

from gasot import metrics
from gasot.harness import pipeline
from gasot.harness.persistence import load_meta
from _toy import toy_config


def test_single_model_smoke():
    rep = pipeline.run_pipeline(toy_config(roster=("fnn_fixed",), n_train=150, n_test=50))
    assert len(rep.cells) == 1
    m = rep.metrics("independent_snr30", "fnn_fixed")
    assert isinstance(m, metrics.MetricsReport) and 0 <= m.micro_f1 <= 1


def test_full_roster_and_artifacts(tmp_path):
    cfg = toy_config(modes=("independent", "correlated"), snrs=(10.0, 30.0), out_dir=str(tmp_path))
    rep = pipeline.run_pipeline(cfg)
    assert len(rep.cells) == 12 and all(c["error"] is None for c in rep.cells)
    h = cfg.hash()
    rows = (tmp_path / "metrics.csv").read_text().splitlines()
    assert len(rows) == 13 and all(r.endswith(c["manifest_sha256"]) for r, c in zip(rows[1:], rep.cells))
    assert all(h in r for r in rows[1:])
    for c in rep.cells:
        d = json.loads((tmp_path / "metrics" / f"{c['dataset']}__{c['model']}.json").read_text())
        assert d["config_hash"] == h and d["manifest_sha256"] == c["manifest_sha256"]
        meta = load_meta(tmp_path / "models" / c["dataset"] / f"{c['model']}.json")
        assert meta["config_hash"] == h and meta["manifest_sha256"] == c["manifest_sha256"]
    man = json.loads((tmp_path / "datasets" / "correlated_snr10" / "manifest.json").read_text())
    assert man["run"]["config_hash"] == h and man["mode"] == "correlated"
    saved = pipeline.RunReport.load(tmp_path / "report.json")
    assert saved.hash() == rep.hash()


def test_determinism_hash_identical():
    cfg = toy_config(roster=("fnn_ot", "pls_br"))
    a, b = pipeline.run_pipeline(cfg), pipeline.run_pipeline(cfg)
    assert a.hash() == b.hash()
    assert a.timings.keys() == b.timings.keys()


def test_cell_isolation(monkeypatch):
    cfg = toy_config()
    clean = pipeline.run_pipeline(cfg)

    def boom(*a, **k):
        raise RuntimeError("pls exploded")

    monkeypatch.setattr(pipeline.pls, "plsbr_fit", boom)
    broken = pipeline.run_pipeline(cfg)
    cell = broken.cell("independent_snr30", "pls_br")
    assert cell["metrics"] is None and cell["error"]["message"] == "pls exploded"
    for kind in ("fnn_fixed", "fnn_ot"):
        assert broken.cell("independent_snr30", kind) == clean.cell("independent_snr30", kind)


def test_dataset_failure_marks_every_cell(monkeypatch):
    def boom(*a, **k):
        raise ValueError("no data")

    monkeypatch.setattr(pipeline, "generate_dataset", boom)
    rep = pipeline.run_pipeline(toy_config())
    assert len(rep.cells) == 3 and all(c["error"]["type"] == "ValueError" for c in rep.cells)


def test_grid_single_cell_is_plain_training():
    cfg = toy_config()
    g = pipeline.grid_search_dropout(cfg, (1.0,), (1.0,))
    assert len(g["rows"]) == 1 and g["argmin"] == {"p1": 1.0, "p2": 1.0}
    lib = pipeline.resolve_library(cfg.library)
    ss = pipeline.generate_dataset(pipeline.dataset_manifest(cfg, lib, cfg.grid_snr, "independent"), lib)
    train, test = pipeline._split(ss, cfg.n_train)
    (fit_idx, val_idx), = pipeline._folds(train.n_samples, cfg)
    f = pipeline.fit_models(train.subset(fit_idx), cfg, ("fnn_ot",), (1.0, 1.0))
    val = train.subset(val_idx)
    p = f.pipelines["fnn_ot"]
    assert g["rows"][0]["val_hamming_loss"] == metrics.hamming_loss(val.labels, p.predict(val.absorbance))
    assert g["rows"][0]["test_hamming_loss"] == metrics.hamming_loss(test.labels, p.predict(test.absorbance))


def test_grid_argmin_matches_table_and_kfold():
    g = pipeline.grid_search_dropout(toy_config())
    assert len(g["rows"]) == 4
    best = min(g["rows"], key=lambda r: r["val_hamming_loss"])
    assert g["argmin"] == {"p1": best["p1"], "p2": best["p2"]}
    k = pipeline.grid_search_dropout(toy_config(folds=3), (1.0,), (0.5,))
    assert k["rows"][0]["test_hamming_loss"] is None and k["rows"][0]["val_hamming_loss"] is not None
    with pytest.raises(ValueError):
        pipeline.grid_search_dropout(toy_config(), (), (1.0,))
    with pytest.raises(ValueError):
        pipeline.grid_search_dropout(toy_config(), (1.2,), (1.0,))


def test_learning_curve_shape():
    lc = pipeline.learning_curve(toy_config())
    assert set(lc["series"]) == set(pipeline.CURVE_MODELS)
    for pts in lc["series"].values():
        assert [p["size"] for p in pts] == [40, 80, 150]
        assert all(0 <= p["train_loss"] <= 1 and 0 <= p["test_loss"] <= 1 for p in pts)
    for bad in ((100, 50), (), (1, 5)):
        with pytest.raises(ValueError):
            pipeline.learning_curve(toy_config(), bad)


def test_split_and_common_seed():
    cfg = toy_config()
    lib = pipeline.resolve_library(cfg.library)
    a = pipeline.dataset_manifest(cfg, lib, 10.0, "independent")
    b = pipeline.dataset_manifest(cfg, lib, 50.0, "independent")
    assert a["seed"] == b["seed"] and a["n_samples"] == cfg.n_train + cfg.n_test
    assert pipeline.dataset_id("correlated", 10.0) == "correlated_snr10"
    assert pipeline.dataset_id("independent", float("inf")) == "independent_snrinf"
    assert np.isfinite(a["seed"])


def test_learning_curve_trends_desk_scale():
    """Small training sets are memorised; dropout narrows the gap at full size."""
    from gasot.harness.config import ExperimentConfig
    lc = pipeline.learning_curve(ExperimentConfig())["series"]
    for model in ("fnn_ot_no_dropout", "pls_br"):
        small = [p for p in lc[model] if p["size"] <= 2000]
        assert min(p["train_loss"] for p in small) < 0.05
        assert all(p["test_loss"] > p["train_loss"] for p in small)
    gap = {m: lc[m][-1]["test_loss"] - lc[m][-1]["train_loss"] for m in ("fnn_ot_dropout", "fnn_ot_no_dropout")}
    assert gap["fnn_ot_dropout"] < gap["fnn_ot_no_dropout"]
