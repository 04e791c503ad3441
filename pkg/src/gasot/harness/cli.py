"""Command-line entry point.

Every subcommand accepts ``--config FILE`` (a JSON ExperimentConfig) plus
flags mirroring the config fields; flags override file values. Results go
to stdout as JSON. Failures print ``{"error": ..., "type": ...}`` to stderr
and exit with status 1 (status 2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..gaslib import library_hash, load_library
from ..synth import generate_dataset, load_dataset, make_manifest, resolve_library, save_dataset
from .config import ExperimentConfig
from .persistence import MODEL_KINDS, load_meta, load_model, save_model
from .pipeline import (evaluate_pipeline, fit_models, grid_search_dropout, learning_curve,
                       run_pipeline, write_report)
from .plots import emit_plots


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        json.dump({"error": message, "type": "UsageError", "usage": self.format_usage().strip()}, sys.stderr)
        sys.stderr.write("\n")
        sys.exit(2)


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _words(s: str) -> tuple:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _pair(s: str) -> tuple:
    v = _floats(s)
    if len(v) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated values")
    return v


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (overrides --config)")
    g.add_argument("--config", type=Path, help="JSON ExperimentConfig file")
    g.add_argument("--seed", type=int)
    g.add_argument("--snrs", type=_floats, help="comma-separated SNR list in dB")
    g.add_argument("--modes", type=_words, help="independent,correlated")
    g.add_argument("--n-train", type=int)
    g.add_argument("--n-test", type=int)
    g.add_argument("--roster", type=_words, help=",".join(MODEL_KINDS))
    g.add_argument("--pca-components", type=int)
    g.add_argument("--hidden", type=int)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--learning-rate", type=float)
    g.add_argument("--retention", type=_pair, help="p1,p2")
    g.add_argument("--pls-components", type=int)
    g.add_argument("--pls-raw", action="store_true", help="fit PLS-BR on raw pixels instead of PC scores")
    g.add_argument("--bin-width", type=float)
    g.add_argument("--recall-floor", type=float)
    g.add_argument("--library-csv", type=Path, help="cross-section CSV instead of the fixture library")
    g.add_argument("--path-cm", type=float)
    g.add_argument("--validation-fraction", type=float)
    g.add_argument("--folds", type=int)
    g.add_argument("--grid-snr", type=float)
    g.add_argument("--grid-p1", type=_floats)
    g.add_argument("--grid-p2", type=_floats)
    g.add_argument("--curve-snr", type=float)
    g.add_argument("--curve-sizes", type=_ints)
    g.add_argument("--out-dir", type=str)


def build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    train = cfg.train.to_dict()
    for flag, key in (("epochs", "epochs"), ("batch_size", "batch_size"),
                      ("learning_rate", "learning_rate"), ("retention", "retention")):
        v = getattr(args, flag, None)
        if v is not None:
            train[key] = v
    library = None
    if args.library_csv is not None:
        lib = load_library(args.library_csv)
        library = {"kind": "csv", "path": str(args.library_csv.resolve()), "sha256": library_hash(lib)}
    cfg = cfg.with_overrides(
        seed=args.seed, snrs=args.snrs, modes=args.modes, n_train=args.n_train, n_test=args.n_test,
        roster=args.roster, pca_components=args.pca_components, hidden=args.hidden,
        pls_components=args.pls_components, pls_on_pca=False if args.pls_raw else None,
        bin_width=args.bin_width, recall_floor=args.recall_floor, library=library,
        path_cm=args.path_cm, validation_fraction=args.validation_fraction, folds=args.folds,
        grid_snr=args.grid_snr, grid_p1=args.grid_p1, grid_p2=args.grid_p2,
        curve_snr=args.curve_snr, curve_sizes=args.curve_sizes, out_dir=args.out_dir,
    )
    return replace(cfg, train=type(cfg.train).from_dict(train))


def _write_json(obj, path: Path | None) -> dict:
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=1, sort_keys=True))
    return obj


def cmd_synth(args) -> dict:
    cfg = build_config(args)
    lib = resolve_library(cfg.library)
    manifest = make_manifest(cfg.library, lib, args.n, cfg.seed, args.snr, args.mode, cfg.path_cm)
    ss = generate_dataset(manifest, lib, workers=args.workers)
    save_dataset(ss, args.out)
    return {"dataset": str(args.out), "n_samples": ss.n_samples, "config_hash": cfg.hash()}


def cmd_train(args) -> dict:
    cfg = build_config(args)
    ss = load_dataset(args.data)
    fitted = fit_models(ss, cfg, (args.model,))
    if args.model in fitted.errors:
        raise RuntimeError(fitted.errors[args.model]["message"])
    save_model(fitted.pipelines[args.model], args.out, config_hash=cfg.hash(),
               manifest=ss.manifest, config=cfg.to_dict())
    return {"model": str(args.out), "kind": args.model, "config_hash": cfg.hash()}


def cmd_eval(args) -> dict:
    cfg = build_config(args)
    model = load_model(args.model)
    ss = load_dataset(args.data)
    report = evaluate_pipeline(model, ss, cfg, ss.manifest.get("gas_names"))
    out = {"metrics": report.to_dict(), "model": str(args.model), "manifest": ss.manifest,
           "config_hash": load_meta(args.model).get("config_hash")}
    return _write_json(out, args.out)


def cmd_experiment(args) -> dict:
    cfg = build_config(args)
    report = run_pipeline(cfg)
    if args.grid:
        report.grid = grid_search_dropout(cfg)
    if args.curves:
        report.learning_curves = learning_curve(cfg)
    summary = {"config_hash": report.config_hash, "report_hash": report.hash(),
               "cells": len(report.cells), "failed": sum(c["error"] is not None for c in report.cells)}
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        write_report(report, out)
        if not args.no_plots:
            written = emit_plots(report, out / "plots")
            summary["plots"] = sorted(k for k in written if k != "skipped")
        summary["out_dir"] = str(out)
    return summary


def cmd_grid(args) -> dict:
    cfg = build_config(args)
    res = {**grid_search_dropout(cfg), "config_hash": cfg.hash()}
    return _write_json(res, args.out)


def cmd_curve(args) -> dict:
    cfg = build_config(args)
    res = {**learning_curve(cfg), "config_hash": cfg.hash()}
    return _write_json(res, args.out)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gasot", description="Multi-gas IR spectra classification experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a dataset and its manifest")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--snr", type=float, default=float("inf"))
    p.add_argument("--mode", default="independent")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one model on a saved dataset")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="metrics for a saved model on a saved dataset")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="full protocol over every (mode, SNR) dataset")
    p.add_argument("--grid", action="store_true", help="also run the dropout grid search")
    p.add_argument("--curves", action="store_true", help="also compute learning curves")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("grid", help="dropout retention grid search")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("curve", help="learning curves")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_curve)

    for sp in sub.choices.values():
        _add_config_flags(sp)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except Exception as exc:
        json.dump({"error": str(exc), "type": type(exc).__name__, "command": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    json.dump(result, sys.stdout, indent=1, sort_keys=True, default=str)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
