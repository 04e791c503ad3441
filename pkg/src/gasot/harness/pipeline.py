"""Experiment pipelines: the full protocol, dropout grid search, learning curves.

Training flow per dataset: PCA on the training spectra, an FNN on the PC
scores, optimal per-sample thresholds on the FNN's training scores, and a
threshold network fitted to those thresholds. PLS-BR is fitted on the same
features. All models are scored on the held-out test rows.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import fnn, metrics, ot, pca, pls
from .._seeding import derive_seed
from ..synth import SampleSet, generate_dataset, make_manifest, resolve_library
from .config import ExperimentConfig, canonical_hash
from .persistence import Pipeline, save_model

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    config: dict
    config_hash: str
    cells: list = field(default_factory=list)
    explained_variance: dict = field(default_factory=dict)
    train_history: dict = field(default_factory=dict)
    learning_curves: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def content(self) -> dict:
        """Report contents without wall-clock timings."""
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "cells": self.cells,
            "explained_variance": self.explained_variance,
            "train_history": self.train_history,
            "learning_curves": self.learning_curves,
            "grid": self.grid,
        }

    def hash(self) -> str:
        return canonical_hash(self.content())

    def to_dict(self) -> dict:
        return {**self.content(), "timings": self.timings, "report_hash": self.hash()}

    def metrics(self, dataset: str, model: str) -> metrics.MetricsReport | None:
        for c in self.cells:
            if c["dataset"] == dataset and c["model"] == model and c["metrics"] is not None:
                return metrics.MetricsReport.from_dict(c["metrics"])
        return None

    def cell(self, dataset: str, model: str) -> dict:
        for c in self.cells:
            if c["dataset"] == dataset and c["model"] == model:
                return c
        raise KeyError((dataset, model))

    @classmethod
    def load(cls, path) -> "RunReport":
        d = json.loads(Path(path).read_text())
        d.pop("report_hash", None)
        return cls(**d)


def dataset_id(mode: str, snr_db: float) -> str:
    snr = "inf" if math.isinf(snr_db) else f"{snr_db:g}"
    return f"{mode}_snr{snr}"


def _split(ss: SampleSet, n_train: int) -> tuple[SampleSet, SampleSet]:
    return ss.subset(slice(0, n_train)), ss.subset(slice(n_train, None))


def stage_seeds(config: ExperimentConfig) -> dict:
    names = ("dataset", "fnn", "threshold")
    return {n: derive_seed(config.seed, n) for n in names}


def dataset_manifest(config: ExperimentConfig, lib, snr_db: float, mode: str, n: int | None = None) -> dict:
    """Manifest for one dataset of the protocol.

    All datasets of a run share the dataset seed, so sweeps over SNR reuse
    the same concentrations, presence masks and unit noise draws.
    """
    n = config.n_train + config.n_test if n is None else n
    return make_manifest(config.library, lib, n, stage_seeds(config)["dataset"], snr_db, mode, config.path_cm)


@dataclass
class FittedModels:
    pca: pca.PcaModel | None
    pipelines: dict
    history: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)


def fit_models(train: SampleSet, config: ExperimentConfig, roster=None,
               retention: tuple | None = None) -> FittedModels:
    """Fit every roster model on ``train``; failures are recorded per model."""
    roster = tuple(config.roster if roster is None else roster)
    seeds = stage_seeds(config)
    k = config.pca_components
    if k is not None:
        k = min(k, *train.absorbance.shape)
    pm = pca.pca_fit(train.absorbance, k)
    feats = pca.pca_transform(pm, train.absorbance)
    out = FittedModels(pm, {})

    if {"fnn_fixed", "fnn_ot"} & set(roster):
        try:
            cfg = replace(config.train, seed=seeds["fnn"])
            if retention is not None:
                cfg = replace(cfg, retention=tuple(retention))
            layout = fnn.FnnLayout(feats.shape[1], config.hidden, train.labels.shape[1])
            net, out.history = fnn.fnn_train(layout, feats, train.labels, cfg)
            if "fnn_fixed" in roster:
                out.pipelines["fnn_fixed"] = Pipeline("fnn_fixed", pm, net)
            if "fnn_ot" in roster:
                scores = fnn.predict_scores(net, feats)
                targets, _ = ot.optimal_thresholds(scores, train.labels)
                tcfg = replace(config.threshold_train, seed=seeds["threshold"])
                tm = ot.fit_threshold_net(scores, targets, tcfg, config.threshold_hidden)
                out.pipelines["fnn_ot"] = Pipeline("fnn_ot", pm, net, tm)
        except Exception as exc:  # cell isolation: record and continue
            for kind in ("fnn_fixed", "fnn_ot"):
                if kind in roster and kind not in out.pipelines:
                    out.errors[kind] = _diagnostic(exc)

    if "pls_br" in roster:
        try:
            front = pm if config.pls_on_pca else None
            x = feats if config.pls_on_pca else train.absorbance
            kk = min(config.pls_components, *x.shape)
            out.pipelines["pls_br"] = Pipeline("pls_br", front, pls_models=pls.plsbr_fit(x, train.labels, kk))
        except Exception as exc:
            out.errors["pls_br"] = _diagnostic(exc)
    return out


def _diagnostic(exc: Exception) -> dict:
    log.warning("cell failed: %s", exc)
    return {"type": type(exc).__name__, "message": str(exc),
            "where": traceback.format_exception(type(exc), exc, exc.__traceback__)[-2].strip()}


def evaluate_pipeline(p: Pipeline, test: SampleSet, config: ExperimentConfig,
                      names=None) -> metrics.MetricsReport:
    y_hat = p.predict(test.absorbance)
    return metrics.evaluate(test.labels, y_hat, test.concentrations, names,
                            config.bin_width, config.recall_floor)


def run_pipeline(config: ExperimentConfig) -> RunReport:
    """Run the full protocol: every (mode, SNR) dataset x every roster model."""
    lib = resolve_library(config.library)
    chash = config.hash()
    report = RunReport(config.to_dict(), chash)
    out = Path(config.out_dir) if config.out_dir else None
    for mode in config.modes:
        for snr in config.snrs:
            ds = dataset_id(mode, snr)
            t0 = time.perf_counter()
            manifest = dataset_manifest(config, lib, snr, mode)
            mhash = canonical_hash(manifest)
            try:
                ss = generate_dataset(manifest, lib)
                train, test = _split(ss, config.n_train)
                fitted = fit_models(train, config)
            except Exception as exc:
                diag = _diagnostic(exc)
                for kind in config.roster:
                    report.cells.append(_cell(ds, kind, mhash, None, diag))
                continue
            report.explained_variance[ds] = pca.explained_variance_curve(fitted.pca).tolist() \
                if fitted.pca.total_variance > 0 else []
            report.train_history[ds] = list(fitted.history)
            for kind in config.roster:
                m, err = None, fitted.errors.get(kind)
                if err is None:
                    try:
                        m = evaluate_pipeline(fitted.pipelines[kind], test, config, lib.names)
                    except Exception as exc:
                        err = _diagnostic(exc)
                report.cells.append(_cell(ds, kind, mhash, m, err))
                if out is not None and kind in fitted.pipelines:
                    save_model(fitted.pipelines[kind], out / "models" / ds / f"{kind}.json",
                               config_hash=chash, manifest_sha256=mhash, dataset=ds)
            if out is not None:
                d = out / "datasets" / ds
                d.mkdir(parents=True, exist_ok=True)
                (d / "manifest.json").write_text(json.dumps(
                    {**manifest, "run": {"config_hash": chash, "manifest_sha256": mhash}},
                    indent=2, sort_keys=True))
            report.timings[ds] = time.perf_counter() - t0
    if out is not None:
        write_report(report, out)
    return report


def _cell(ds: str, kind: str, mhash: str, m, err) -> dict:
    return {"dataset": ds, "model": kind, "manifest_sha256": mhash,
            "metrics": None if m is None else m.to_dict(), "error": err}


METRIC_COLUMNS = ("micro_precision", "micro_recall", "micro_f1", "hamming_loss")


def write_report(report: RunReport, out) -> Path:
    """Write report.json, metrics.csv and one metrics JSON per cell."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    if not report.cells:
        return out
    names = sorted({g for c in report.cells if c["metrics"] for g in c["metrics"]["c_min"]})
    with (out / "metrics.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "model", *METRIC_COLUMNS, *(f"c_min_{g}" for g in names),
                    "error", "config_hash", "manifest_sha256"])
        for c in report.cells:
            m = c["metrics"] or {}
            w.writerow([c["dataset"], c["model"], *(m.get(k, "") for k in METRIC_COLUMNS),
                        *(m.get("c_min", {}).get(g, "") for g in names),
                        (c["error"] or {}).get("message", ""), report.config_hash, c["manifest_sha256"]])
    mdir = out / "metrics"
    mdir.mkdir(exist_ok=True)
    for c in report.cells:
        (mdir / f"{c['dataset']}__{c['model']}.json").write_text(json.dumps(
            {**c, "config_hash": report.config_hash}, indent=1, sort_keys=True))
    return out


# --- dropout grid search ----------------------------------------------------

def _folds(n: int, config: ExperimentConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    idx = np.arange(n)
    if config.folds == 1:
        n_val = max(1, int(round(n * config.validation_fraction)))
        return [(idx[:n - n_val], idx[n - n_val:])]
    parts = np.array_split(idx, config.folds)
    return [(np.concatenate(parts[:i] + parts[i + 1:]), parts[i]) for i in range(config.folds)]


def grid_search_dropout(config: ExperimentConfig, p1_grid=None, p2_grid=None,
                        snr_db: float | None = None, mode: str = "independent") -> dict:
    """Validation Hamming loss of FNN-OT for each retention pair.

    With ``config.folds == 1`` the last ``validation_fraction`` of the
    training rows is held out and each row also reports the test Hamming
    loss of the same model; with k folds the validation loss is the fold
    mean and no test loss is reported.
    """
    p1_grid = tuple(config.grid_p1 if p1_grid is None else p1_grid)
    p2_grid = tuple(config.grid_p2 if p2_grid is None else p2_grid)
    if not p1_grid or not p2_grid:
        raise ValueError("retention grids must be non-empty")
    if any(not 0 < p <= 1 for p in p1_grid + p2_grid):
        raise ValueError("retention values must lie in (0, 1]")
    snr_db = config.grid_snr if snr_db is None else snr_db
    lib = resolve_library(config.library)
    manifest = dataset_manifest(config, lib, snr_db, mode)
    train, test = _split(generate_dataset(manifest, lib), config.n_train)
    folds = _folds(train.n_samples, config)
    rows = []
    for p1 in p1_grid:
        for p2 in p2_grid:
            val_losses, test_loss, err = [], None, None
            try:
                for fit_idx, val_idx in folds:
                    fitted = fit_models(train.subset(fit_idx), config, ("fnn_ot",), (p1, p2))
                    if "fnn_ot" in fitted.errors:
                        raise RuntimeError(fitted.errors["fnn_ot"]["message"])
                    p = fitted.pipelines["fnn_ot"]
                    val = train.subset(val_idx)
                    val_losses.append(metrics.hamming_loss(val.labels, p.predict(val.absorbance)))
                    if config.folds == 1:
                        test_loss = metrics.hamming_loss(test.labels, p.predict(test.absorbance))
            except Exception as exc:
                err = _diagnostic(exc)
            rows.append({"p1": p1, "p2": p2,
                         "val_hamming_loss": float(np.mean(val_losses)) if err is None else None,
                         "test_hamming_loss": test_loss, "error": err})
    ok = [r for r in rows if r["val_hamming_loss"] is not None]
    best = min(ok, key=lambda r: r["val_hamming_loss"]) if ok else None
    return {"snr_db": snr_db, "mode": mode, "manifest_sha256": canonical_hash(manifest),
            "rows": rows, "argmin": None if best is None else {"p1": best["p1"], "p2": best["p2"]}}


# --- learning curves ----------------------------------------------------------

CURVE_MODELS = ("fnn_ot_dropout", "fnn_ot_no_dropout", "pls_br")


def learning_curve(config: ExperimentConfig, train_sizes=None, snr_db: float | None = None,
                   mode: str = "independent") -> dict:
    """Train and test Hamming loss against training-set size.

    The test set stays fixed; each size trains fresh models on a prefix of
    the training pool. Returns ``{model: [{size, train_loss, test_loss}]}``.
    """
    sizes = [int(s) for s in (config.curve_sizes if train_sizes is None else train_sizes)]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("train_sizes must be a non-empty increasing list")
    if sizes[0] < 2:
        raise ValueError("train sizes must be >= 2")
    snr_db = config.curve_snr if snr_db is None else snr_db
    lib = resolve_library(config.library)
    pool = max(sizes)
    manifest = dataset_manifest(config, lib, snr_db, mode, n=pool + config.n_test)
    train_pool, test = _split(generate_dataset(manifest, lib), pool)
    series = {m: [] for m in CURVE_MODELS}
    for size in sizes:
        train = train_pool.subset(slice(0, size))
        variants = (("fnn_ot_dropout", ("fnn_ot",), None),
                    ("fnn_ot_no_dropout", ("fnn_ot",), (1.0, 1.0)),
                    ("pls_br", ("pls_br",), None))
        for name, roster, retention in variants:
            fitted = fit_models(train, config, roster, retention)
            p = fitted.pipelines.get(roster[0])
            if p is None:
                series[name].append({"size": size, "train_loss": None, "test_loss": None,
                                     "error": fitted.errors[roster[0]]})
                continue
            series[name].append({
                "size": size,
                "train_loss": metrics.hamming_loss(train.labels, p.predict(train.absorbance)),
                "test_loss": metrics.hamming_loss(test.labels, p.predict(test.absorbance)),
                "error": None,
            })
    return {"snr_db": snr_db, "mode": mode, "manifest_sha256": canonical_hash(manifest), "series": series}
