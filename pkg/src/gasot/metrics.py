"""Multi-label evaluation: confusion counts, micro metrics, Hamming loss, C_min."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MAX_CONC_UM = 10.0


@dataclass(frozen=True, eq=False)
class ConfusionCounts:
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0])

    def pooled(self) -> dict:
        return {k: int(getattr(self, k).sum()) for k in ("tp", "fp", "fn", "tn")}


@dataclass
class MetricsReport:
    micro_precision: float
    micro_recall: float
    micro_f1: float
    hamming_loss: float
    c_min: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    bin_width: float = 0.5
    recall_floor: float = 0.9

    def to_dict(self) -> dict:
        return {
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "hamming_loss": self.hamming_loss,
            "c_min": {g: ("not reached" if v is None else v) for g, v in self.c_min.items()},
            "counts": dict(self.counts),
            "bin_width": self.bin_width,
            "recall_floor": self.recall_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["c_min"] = {g: (None if v == "not reached" else v) for g, v in d.get("c_min", {}).items()}
        return cls(**d)


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y).astype(bool)
    y_hat = np.asarray(y_hat).astype(bool)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    if y.ndim == 1:
        y, y_hat = y[:, None], y_hat[:, None]
    return y, y_hat


def confusion_counts(y, y_hat) -> ConfusionCounts:
    y, y_hat = _pair(y, y_hat)
    return ConfusionCounts(
        tp=np.sum(y & y_hat, axis=0),
        fp=np.sum(~y & y_hat, axis=0),
        fn=np.sum(y & ~y_hat, axis=0),
        tn=np.sum(~y & ~y_hat, axis=0),
    )


def _ratio(num: int, den: int, what: str) -> float:
    if den == 0:
        log.info("%s is 0/0; reporting 1.0", what)
        return 1.0
    return num / den


def micro_metrics(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Pooled precision, recall and F1.

    F1 is computed as ``2TP / (2TP + FP + FN)``, which equals the harmonic
    mean of precision and recall whenever both are positive.
    """
    c = counts.pooled()
    tp, fp, fn = c["tp"], c["fp"], c["fn"]
    precision = _ratio(tp, tp + fp, "micro precision")
    recall = _ratio(tp, tp + fn, "micro recall")
    f1 = _ratio(2 * tp, 2 * tp + fp + fn, "micro F1")
    return precision, recall, f1


def hamming_loss(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(y != y_hat))


def min_detectable_concentration(y, y_hat, c, bin_width: float = 0.5,
                                 recall_floor: float = 0.9, names=None) -> dict:
    """Per-gas minimum detectable concentration.

    Positive samples of each gas are binned by true concentration into
    ``(0, w], (w, 2w], ...`` up to 10 uM. The result is the lower edge of
    the lowest bin whose recall, and the recall of every higher non-empty
    bin, is at least ``recall_floor``. ``None`` means no bin qualifies.
    """
    y, y_hat = _pair(y, y_hat)
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape != y.shape:
        raise ValueError(f"concentration shape {c.shape} does not match labels {y.shape}")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    n_bins = int(math.ceil(MAX_CONC_UM / bin_width - 1e-9))
    if names is None:
        names = [str(i) for i in range(y.shape[1])]
    out = {}
    for g, name in enumerate(names):
        pos = y[:, g] & (c[:, g] > 0)
        conc = c[pos, g]
        hit = y_hat[pos, g]
        idx = np.clip(np.ceil(conc / bin_width).astype(int) - 1, 0, n_bins - 1)
        total = np.bincount(idx, minlength=n_bins)
        found = np.bincount(idx, weights=hit.astype(float), minlength=n_bins)
        c_min = None
        for b in range(n_bins - 1, -1, -1):
            if total[b] == 0:
                log.debug("gas %s: empty concentration bin %d skipped", name, b)
                continue
            if found[b] / total[b] >= recall_floor:
                c_min = b * bin_width
            else:
                break
        out[name] = c_min
    return out


def evaluate(y, y_hat, c, names=None, bin_width: float = 0.5,
             recall_floor: float = 0.9) -> MetricsReport:
    counts = confusion_counts(y, y_hat)
    p, r, f1 = micro_metrics(counts)
    return MetricsReport(
        micro_precision=p,
        micro_recall=r,
        micro_f1=f1,
        hamming_loss=hamming_loss(y, y_hat),
        c_min=min_detectable_concentration(y, y_hat, c, bin_width, recall_floor, names),
        counts=counts.pooled(),
        bin_width=bin_width,
        recall_floor=recall_floor,
    )
