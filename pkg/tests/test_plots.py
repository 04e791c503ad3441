import csv
import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gasot.harness import pipeline, plots
from _toy import toy_config

FIGS = ("explained_variance", "dropout_grid", "learning_curves",
        "prf_independent", "cmin_independent", "prf_correlated")


@pytest.fixture(scope="module")
def report():
    cfg = toy_config(modes=("independent", "correlated"), snrs=(10.0, 30.0))
    rep = pipeline.run_pipeline(cfg)
    rep.grid = pipeline.grid_search_dropout(cfg)
    rep.learning_curves = pipeline.learning_curve(cfg)
    return rep


def test_one_svg_and_csv_per_figure(tmp_path, report):
    written = plots.emit_plots(report, tmp_path)
    assert written["skipped"] == []
    for fig in FIGS:
        svg = (tmp_path / f"{fig}.svg").read_text()
        assert svg.startswith("<svg") and "<script" not in svg and "href" not in svg
        assert report.config_hash in svg
        assert (tmp_path / f"{fig}.csv").exists()


def test_csv_rows_match_series(tmp_path, report):
    plots.emit_plots(report, tmp_path)
    for fig, (series, _) in plots.figure_series(report).items():
        with (tmp_path / f"{fig}.csv").open() as fh:
            rows = list(csv.reader(fh))[1:]
        assert len(rows) == sum(len(xs) for xs, _ in series.values())
        assert all(r[-1] == report.config_hash for r in rows)


def test_axis_ranges_cover_csv_extents(tmp_path, report):
    plots.emit_plots(report, tmp_path)
    for fig in FIGS:
        with (tmp_path / f"{fig}.csv").open() as fh:
            rows = list(csv.reader(fh))[1:]
        xs = [float(r[1]) for r in rows]
        ys = [float(r[2]) for r in rows]
        svg = (tmp_path / f"{fig}.svg").read_text()
        x0, x1 = map(float, re.search(r'data-x-range="([^"]+)"', svg).group(1).split(","))
        y0, y1 = map(float, re.search(r'data-y-range="([^"]+)"', svg).group(1).split(","))
        assert x0 <= min(xs) and x1 >= max(xs) and y0 <= min(ys) and y1 >= max(ys)


def test_empty_series_skipped(tmp_path, report):
    rep = pipeline.RunReport(report.config, report.config_hash, cells=report.cells,
                             explained_variance=report.explained_variance)
    written = plots.emit_plots(rep, tmp_path)
    assert set(written["skipped"]) == {"dropout_grid", "learning_curves"}
    assert not (tmp_path / "learning_curves.svg").exists()
    assert plots.line_chart({"a": ([1, 2], [None, None])}, tmp_path / "x.svg",
                            title="t", xlabel="x", ylabel="y") is None
    with pytest.raises(ValueError):
        plots.emit_plots(pipeline.RunReport({}, "h"), tmp_path)


@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_nice_ticks_cover(lo, span):
    t = plots.nice_ticks(lo, lo + span)
    assert t[0] <= lo + 1e-9 * max(1, abs(lo)) and t[-1] >= lo + span - 1e-9 * max(1, abs(lo + span))
    assert np.all(np.diff(t) > 0)
