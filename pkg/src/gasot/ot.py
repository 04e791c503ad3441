"""Per-sample optimal thresholding of multi-label scores.

For each training sample the label scores are sorted and the candidate
cuts ``0, midpoints of consecutive scores, 1`` are tried; the cut with the
best per-sample F1 becomes that sample's target threshold. A small
regression network then learns to predict the threshold from the raw score
vector, so test samples get their own threshold too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fnn import FnnLayout, FnnModel, TrainConfig, fnn_train, predict_scores

THRESHOLD_TRAIN = TrainConfig(retention=(1.0, 1.0))


@dataclass(frozen=True, eq=False)
class ThresholdModel:
    net: FnnModel

    def __post_init__(self):
        lo = self.net.layout
        if lo.head != "linear_mse" or lo.n_out != 1:
            raise ValueError("threshold net needs a linear_mse head with one output")

    @property
    def n_labels(self) -> int:
        return self.net.layout.n_in


def _check_scores(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        raise ValueError("need at least one score")
    if np.any(~np.isfinite(s)) or np.any(s < 0) or np.any(s > 1):
        raise ValueError("scores must lie in [0, 1]")
    return s


def candidate_thresholds(s) -> np.ndarray:
    """``[0, (s1+s2)/2, ..., (s_{L-1}+s_L)/2, 1]`` for sorted scores ``s``."""
    s = np.sort(_check_scores(s).ravel())
    return np.concatenate(([0.0], 0.5 * (s[:-1] + s[1:]), [1.0]))


def sample_f1(y, y_hat) -> float:
    """Per-sample F1, ``2TP / (2TP + FP + FN)``; 1.0 when TP = FP = FN = 0."""
    y = np.asarray(y).astype(bool)
    y_hat = np.asarray(y_hat).astype(bool)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    tp = int(np.sum(y & y_hat))
    fp = int(np.sum(~y & y_hat))
    fn = int(np.sum(y & ~y_hat))
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else 2 * tp / denom


def optimal_threshold(s, y) -> tuple[float, float]:
    """Best candidate threshold for one sample and the F1 it achieves.

    Ties go to the largest candidate.
    """
    s = _check_scores(s)
    y = np.asarray(y)
    if s.shape != y.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {y.shape}")
    t, f = optimal_thresholds(s[None, :], y[None, :])
    return float(t[0]), float(f[0])


def optimal_thresholds(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`optimal_threshold` over the rows of ``scores``."""
    s = _check_scores(scores)
    y = np.asarray(labels).astype(bool)
    if s.ndim != 2 or s.shape != y.shape:
        raise ValueError(f"shape mismatch: scores {s.shape} vs labels {y.shape}")
    ss = np.sort(s, axis=1)
    n = s.shape[0]
    cands = np.hstack([np.zeros((n, 1)), 0.5 * (ss[:, :-1] + ss[:, 1:]), np.ones((n, 1))])
    pred = s[:, None, :] > cands[:, :, None]          # (n, L+1, L)
    tp = np.sum(pred & y[:, None, :], axis=2)
    fp = np.sum(pred & ~y[:, None, :], axis=2)
    fn = np.sum(~pred & y[:, None, :], axis=2)
    denom = 2 * tp + fp + fn
    f1 = np.where(denom == 0, 1.0, 2 * tp / np.maximum(denom, 1))
    # last index of the maximum = largest candidate among ties
    best = f1.shape[1] - 1 - np.argmax(f1[:, ::-1], axis=1)
    rows = np.arange(n)
    return cands[rows, best], f1[rows, best]


def fit_threshold_net(scores, thresholds, config: TrainConfig = THRESHOLD_TRAIN,
                      n_hidden: int = 64) -> ThresholdModel:
    """Regress per-sample thresholds on raw (unsorted) score vectors."""
    scores = np.asarray(scores, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float).reshape(-1)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ValueError("need a non-empty (n, L) score matrix")
    if thresholds.shape[0] != scores.shape[0]:
        raise ValueError("one threshold per score row is required")
    layout = FnnLayout(scores.shape[1], n_hidden, 1, "linear_mse")
    net, _ = fnn_train(layout, scores, thresholds[:, None], config)
    return ThresholdModel(net)


def predict_thresholds(scores, model: ThresholdModel) -> np.ndarray:
    """Network thresholds clamped to [0, 1]."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != model.n_labels:
        raise ValueError(f"scores have shape {scores.shape}, expected (n, {model.n_labels})")
    return np.clip(predict_scores(model.net, scores)[:, 0], 0.0, 1.0)


def predict_labels_ot(scores, model: ThresholdModel) -> np.ndarray:
    t = predict_thresholds(scores, model)
    return (np.asarray(scores) > t[:, None]).astype(np.int8)


def predict_labels_fixed(scores, t: float = 0.5) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return (np.asarray(scores, dtype=float) > t).astype(np.int8)
