"""JSON model container.

Every saved model is a JSON object with ``format_version``, a ``role`` tag
and named arrays stored as ``{"shape": [...], "data": [...]}`` with the
data flattened row-major. Floats are written with full round-trip
precision, so a loaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import fnn, ot, pca, pls

FORMAT_VERSION = 1
ROLES = ("pca", "fnn", "threshold_net", "pls_br", "pipeline")
MODEL_KINDS = ("fnn_fixed", "fnn_ot", "pls_br")


class ContainerError(ValueError):
    """Raised for unreadable, corrupted or incompatible model containers."""


@dataclass(eq=False)
class Pipeline:
    """A complete spectra -> labels model (PCA front end plus classifier)."""

    kind: str
    pca: pca.PcaModel | None
    net: fnn.FnnModel | None = None
    threshold: ot.ThresholdModel | None = None
    pls_models: list = field(default_factory=list)
    fixed_threshold: float = 0.5

    def features(self, absorbance) -> np.ndarray:
        a = np.asarray(absorbance, dtype=float)
        return a if self.pca is None else pca.pca_transform(self.pca, a)

    def predict(self, absorbance) -> np.ndarray:
        x = self.features(absorbance)
        if self.kind == "pls_br":
            return pls.plsbr_predict(self.pls_models, x)
        scores = fnn.predict_scores(self.net, x)
        if self.kind == "fnn_ot":
            return ot.predict_labels_ot(scores, self.threshold)
        return ot.predict_labels_fixed(scores, self.fixed_threshold)


def _enc(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _dec(d: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in d["shape"])
        data = np.asarray(d["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ContainerError(f"array {name!r} is malformed: {exc}") from None
    if data.ndim != 1 or data.size != int(np.prod(shape)):
        raise ContainerError(f"array {name!r} has {data.size} values, shape {list(shape)} needs {int(np.prod(shape))}")
    if not np.all(np.isfinite(data)):
        raise ContainerError(f"array {name!r} contains non-finite values")
    return data.reshape(shape)


def _pca_record(m: pca.PcaModel) -> dict:
    return {"role": "pca", "total_variance": m.total_variance,
            "arrays": {"mean": _enc(m.mean), "components": _enc(m.components),
                       "eigenvalues": _enc(m.eigenvalues)}}


def _fnn_record(m: fnn.FnnModel, role: str = "fnn") -> dict:
    lo = m.layout
    return {"role": role,
            "layout": {"n_in": lo.n_in, "n_hidden": lo.n_hidden, "n_out": lo.n_out, "head": lo.head},
            "arrays": {k: _enc(v) for k, v in m.params().items()}}


def _pls_record(models: list) -> dict:
    labels = []
    for m in models:
        p = m.pls
        labels.append({"arrays": {
            "x_mean": _enc(p.x_mean), "y_mean": _enc(p.y_mean), "weights": _enc(p.weights),
            "x_loadings": _enc(p.x_loadings), "y_loadings": _enc(p.y_loadings),
            "residual_norms": _enc(p.residual_norms), "iterations": _enc(p.iterations)}})
    return {"role": "pls_br", "labels": labels}


def to_record(model) -> dict:
    if isinstance(model, pca.PcaModel):
        return _pca_record(model)
    if isinstance(model, ot.ThresholdModel):
        return _fnn_record(model.net, "threshold_net")
    if isinstance(model, fnn.FnnModel):
        return _fnn_record(model)
    if isinstance(model, list) and all(isinstance(m, pls.PlsDaModel) for m in model):
        return _pls_record(model)
    if isinstance(model, Pipeline):
        parts = {}
        if model.pca is not None:
            parts["pca"] = to_record(model.pca)
        if model.net is not None:
            parts["fnn"] = to_record(model.net)
        if model.threshold is not None:
            parts["threshold_net"] = to_record(model.threshold)
        if model.pls_models:
            parts["pls_br"] = to_record(model.pls_models)
        return {"role": "pipeline", "kind": model.kind,
                "fixed_threshold": model.fixed_threshold, "parts": parts}
    raise TypeError(f"cannot serialise {type(model).__name__}")


def from_record(rec: dict):
    role = rec.get("role")
    arrays = rec.get("arrays", {})
    try:
        if role == "pca":
            return pca.PcaModel(_dec(arrays["mean"], "mean"), _dec(arrays["components"], "components"),
                                _dec(arrays["eigenvalues"], "eigenvalues"), float(rec["total_variance"]))
        if role in ("fnn", "threshold_net"):
            layout = fnn.FnnLayout(**rec["layout"])
            net = fnn.FnnModel(**{k: _dec(arrays[k], k) for k in fnn.PARAM_NAMES}, layout=layout)
            return ot.ThresholdModel(net) if role == "threshold_net" else net
        if role == "pls_br":
            out = []
            for i, lab in enumerate(rec["labels"]):
                a = lab["arrays"]
                out.append(pls.PlsDaModel(pls.PlsModel(
                    *(_dec(a[k], f"labels[{i}].{k}") for k in
                      ("x_mean", "y_mean", "weights", "x_loadings", "y_loadings",
                       "residual_norms", "iterations")))))
            return out
        if role == "pipeline":
            parts = rec["parts"]
            if rec["kind"] not in MODEL_KINDS:
                raise ContainerError(f"unknown pipeline kind {rec['kind']!r}")
            return Pipeline(
                kind=rec["kind"],
                pca=from_record(parts["pca"]) if "pca" in parts else None,
                net=from_record(parts["fnn"]) if "fnn" in parts else None,
                threshold=from_record(parts["threshold_net"]) if "threshold_net" in parts else None,
                pls_models=from_record(parts["pls_br"]) if "pls_br" in parts else [],
                fixed_threshold=float(rec.get("fixed_threshold", 0.5)),
            )
    except KeyError as exc:
        raise ContainerError(f"{role} record is missing field {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ContainerError):
            raise
        raise ContainerError(f"{role} record is invalid: {exc}") from None
    raise ContainerError(f"unknown role {role!r}")


def save_model(model, path, **meta) -> Path:
    """Write ``model`` to ``path``; extra keyword args go into ``meta``."""
    rec = {"format_version": FORMAT_VERSION, **to_record(model), "meta": meta}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rec, sort_keys=True))
    return path


def load_model(path):
    try:
        rec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContainerError(f"{path}: not valid JSON ({exc})") from None
    version = rec.get("format_version")
    if version != FORMAT_VERSION:
        raise ContainerError(f"{path}: format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    return from_record(rec)


def load_meta(path) -> dict:
    return json.loads(Path(path).read_text()).get("meta", {})
