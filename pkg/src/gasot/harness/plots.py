"""Static SVG charts and their CSV data for a RunReport."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .pipeline import RunReport

log = logging.getLogger(__name__)

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
NOT_REACHED_UM = 10.0  # C_min stand-in for gases never reliably detected


def nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    """Round tick positions whose span covers ``[lo, hi]``."""
    # spans below display resolution collapse onto a single value
    if hi - lo <= 1e-9 * max(1.0, abs(lo), abs(hi)):
        pad = abs(lo) * 0.05 if abs(lo) > 1e-9 else 0.5
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step + 1e-9) * step
    stop = math.ceil(hi / step - 1e-9) * step
    return np.round(np.arange(start, stop + step / 2, step), 12)


def _clean(series: dict) -> dict:
    """Drop points with a missing y value and series that end up empty."""
    out = {}
    for name, (xs, ys) in series.items():
        pts = [(float(x), float(y)) for x, y in zip(xs, ys) if y is not None and math.isfinite(y)]
        if pts:
            out[name] = pts
        else:
            log.info("series %r is empty; skipped", name)
    return out


def line_chart(series: dict, path, *, title: str, xlabel: str, ylabel: str,
               meta: dict | None = None) -> Path | None:
    """Write a line chart with point markers. ``series`` maps name -> (xs, ys).

    Returns None (and writes nothing) when every series is empty.
    """
    series = _clean(series)
    if not series:
        log.info("chart %r has no data; skipped", title)
        return None
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    xt, yt = nice_ticks(min(xs), max(xs)), nice_ticks(min(ys), max(ys))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    meta = dict(meta or {})
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        "<metadata>" + escape(" ".join(f"{k}={v}" for k, v in sorted(meta.items()))) + "</metadata>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g class="plot" data-x-range="{x0:g},{x1:g}" data-y-range="{y0:g},{y1:g}">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in xt:
        out.append(f'<line x1="{sx(t):.2f}" y1="{sy(y0):.2f}" x2="{sx(t):.2f}" y2="{sy(y0) + 5:.2f}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{sy(y0) + 18:.2f}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        out.append(f'<line x1="{sx(x0) - 5:.2f}" y1="{sy(t):.2f}" x2="{sx(x1):.2f}" y2="{sy(t):.2f}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{sx(x0) - 8:.2f}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<g class="series" data-name={quoteattr(name)}>')
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.extend(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>' for x, y in pts)
        out.append("</g>")
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(name)}</text>')
    out += [
        "</g>",
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        "</svg>",
    ]
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def write_series_csv(series: dict, path, *, x_name: str, y_name: str, meta: dict) -> Path | None:
    series = _clean(series)
    if not series:
        return None
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series", x_name, y_name, *sorted(meta)])
        extra = [meta[k] for k in sorted(meta)]
        for name, pts in series.items():
            for x, y in pts:
                w.writerow([name, repr(x), repr(y), *extra])
    return path


def _snr_series(report: RunReport, mode: str, field: str, models) -> dict:
    out = {}
    for model in models:
        xs, ys = [], []
        for c in report.cells:
            ds = c["dataset"]
            if c["model"] != model or not ds.startswith(mode + "_snr") or c["metrics"] is None:
                continue
            xs.append(float(ds.split("_snr", 1)[1]))
            ys.append(field(c["metrics"]) if callable(field) else c["metrics"][field])
        order = np.argsort(xs)
        out[model] = ([xs[i] for i in order], [ys[i] for i in order])
    return out


def _mean_cmin(m: dict) -> float:
    vals = [v if isinstance(v, (int, float)) else NOT_REACHED_UM for v in m["c_min"].values()]
    return float(np.mean(vals))


def figure_series(report: RunReport) -> dict:
    """Figure id -> (series, chart kwargs) for every chart."""
    models = list(report.config.get("roster", []))
    figs = {}
    ev = {ds: (list(range(1, len(v) + 1)), [100 * x for x in v])
          for ds, v in report.explained_variance.items()}
    figs["explained_variance"] = (ev, dict(
        title="Cumulative explained variance", xlabel="number of principal components",
        ylabel="explained variance (%)"))
    grid = {}
    for r in report.grid.get("rows", []):
        xs, ys = grid.setdefault(f"p1={r['p1']:g}", ([], []))
        xs.append(r["p2"])
        ys.append(r["val_hamming_loss"])
    figs["dropout_grid"] = (grid, dict(
        title="Dropout grid search (FNN-OT)", xlabel="hidden-layer retention p2",
        ylabel="validation Hamming loss"))
    curves = {}
    for model, pts in report.learning_curves.get("series", {}).items():
        sizes = [p["size"] for p in pts]
        curves[f"{model} train"] = (sizes, [p["train_loss"] for p in pts])
        curves[f"{model} test"] = (sizes, [p["test_loss"] for p in pts])
    figs["learning_curves"] = (curves, dict(
        title="Learning curves", xlabel="training samples", ylabel="Hamming loss"))
    for fig, mode in (("prf_independent", "independent"), ("prf_correlated", "correlated")):
        s = {}
        for key, label in (("micro_precision", "P"), ("micro_recall", "R"), ("micro_f1", "F1")):
            for model, xy in _snr_series(report, mode, key, models).items():
                s[f"{model} {label}"] = xy
        figs[fig] = (s, dict(title=f"Micro precision, recall, F1 ({mode})", xlabel="SNR (dB)",
                             ylabel="score"))
    figs["cmin_independent"] = (_snr_series(report, "independent", _mean_cmin, models), dict(
        title="Mean minimum detectable concentration (independent)", xlabel="SNR (dB)",
        ylabel="C_min (uM), not reached = 10"))
    return figs


def emit_plots(report: RunReport, out_dir) -> dict:
    """Write one SVG and one CSV per chart.

    Returns ``{figure_id: [paths]}``; figures without data are skipped and
    listed under ``"skipped"``.
    """
    if not report.cells and not report.learning_curves and not report.grid:
        raise ValueError("report is empty; nothing to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"config_hash": report.config_hash}
    written, skipped = {}, []
    for fig, (series, kw) in figure_series(report).items():
        svg = line_chart(series, out_dir / f"{fig}.svg", meta=meta, **kw)
        if svg is None:
            skipped.append(fig)
            continue
        csv_path = write_series_csv(series, out_dir / f"{fig}.csv", x_name=kw["xlabel"],
                                    y_name=kw["ylabel"], meta=meta)
        written[fig] = [svg, csv_path]
    written["skipped"] = skipped
    return written
