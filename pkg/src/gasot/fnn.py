"""One-hidden-layer feedforward network trained with Adam and inverted dropout.

Two output heads are supported: ``sigmoid_xent`` (per-label scores with
summed binary cross-entropy) and ``linear_mse`` (regression with mean
squared error). Arrays are batch-major: ``x`` is ``(n, n_in)``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._seeding import substream

log = logging.getLogger(__name__)

HEADS = ("sigmoid_xent", "linear_mse")
PARAM_NAMES = ("w1", "b1", "w2", "b2")
CLIP = 1e-7


class TrainingError(RuntimeError):
    """Raised when training diverges (non-finite loss)."""


@dataclass(frozen=True)
class FnnLayout:
    n_in: int
    n_hidden: int
    n_out: int
    head: str = "sigmoid_xent"

    def __post_init__(self):
        if min(self.n_in, self.n_hidden, self.n_out) < 1:
            raise ValueError(f"layout dimensions must be >= 1: {self}")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")


@dataclass(frozen=True)
class TrainConfig:
    retention: tuple = (0.95, 0.2)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 128
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        p1, p2 = self.retention
        object.__setattr__(self, "retention", (float(p1), float(p2)))
        if not (0 < p1 <= 1 and 0 < p2 <= 1):
            raise ValueError(f"retention probabilities must be in (0, 1], got {self.retention}")
        if not self.learning_rate > 0 or not self.epsilon > 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must be in (0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["retention"] = list(self.retention)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "retention" in d:
            d["retention"] = tuple(d["retention"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class FnnModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    layout: FnnLayout

    def __post_init__(self):
        lo = self.layout
        shapes = {"w1": (lo.n_hidden, lo.n_in), "b1": (lo.n_hidden,),
                  "w2": (lo.n_out, lo.n_hidden), "b2": (lo.n_out,)}
        for name, shape in shapes.items():
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, a)

    def params(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def with_params(self, params: dict) -> "FnnModel":
        return replace(self, **params)


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def zeros_like(cls, model: FnnModel) -> "AdamState":
        return cls({k: np.zeros_like(a) for k, a in model.params().items()},
                   {k: np.zeros_like(a) for k, a in model.params().items()}, 0)


def fnn_init(layout: FnnLayout, seed: int = 0) -> FnnModel:
    """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases."""
    rng = substream(seed, "init")
    w1 = rng.standard_normal((layout.n_hidden, layout.n_in)) / np.sqrt(layout.n_in)
    w2 = rng.standard_normal((layout.n_out, layout.n_hidden)) / np.sqrt(layout.n_hidden)
    return FnnModel(w1, np.zeros(layout.n_hidden), w2, np.zeros(layout.n_out), layout)


def sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(x: np.ndarray, n_in: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != n_in:
        raise ValueError(f"input has shape {x.shape}, expected (n, {n_in})")
    return x


def _check_mask(mask: np.ndarray, shape: tuple, p: float | None, which: str) -> None:
    if mask.shape != shape:
        raise ValueError(f"{which} has shape {mask.shape}, expected {shape}")
    nz = np.unique(mask[mask != 0])
    if p is not None:
        ok = nz.size == 0 or (nz.size == 1 and np.isclose(nz[0], 1.0 / p, rtol=1e-12, atol=0))
    else:
        ok = nz.size <= 1 and (nz.size == 0 or nz[0] >= 1.0)
    if not ok:
        raise ValueError(f"{which} entries must be 0 or 1/p")


def dropout_masks(rng: np.random.Generator, n: int, layout: FnnLayout, retention) -> tuple:
    """Inverted-dropout masks: entries are 0 or ``1/p``."""
    p1, p2 = retention
    m1 = (rng.random((n, layout.n_in)) < p1) / p1
    m2 = (rng.random((n, layout.n_hidden)) < p2) / p2
    return m1, m2


def _affine(a: np.ndarray, w: np.ndarray, b: np.ndarray, rowwise: bool) -> np.ndarray:
    if rowwise:
        # non-BLAS contraction: each row's result is independent of batch size
        return np.einsum("ij,kj->ik", np.ascontiguousarray(a), w, optimize=False) + b
    return a @ w.T + b


def _forward(model: FnnModel, x: np.ndarray, masks, rowwise: bool = False):
    xin = x if masks is None else x * masks[0]
    pre = _affine(xin, model.w1, model.b1, rowwise)
    h = np.maximum(pre, 0.0)
    hin = h if masks is None else h * masks[1]
    z = _affine(hin, model.w2, model.b2, rowwise)
    out = sigmoid(z) if model.layout.head == "sigmoid_xent" else z
    return xin, pre, h, hin, out


def fnn_forward(model: FnnModel, x: np.ndarray, dropout_masks=None, retention=None):
    """Forward pass; returns ``(hidden, output)``.

    ``dropout_masks`` is an optional ``(input_mask, hidden_mask)`` pair
    with entries in ``{0, 1/p}``. If ``retention`` is given, the nonzero
    mask values are checked against it.
    """
    x = _as_batch(x, model.layout.n_in)
    if dropout_masks is not None:
        m1, m2 = (np.asarray(m, dtype=float) for m in dropout_masks)
        p1, p2 = retention if retention is not None else (None, None)
        _check_mask(m1, x.shape, p1, "input mask")
        _check_mask(m2, (x.shape[0], model.layout.n_hidden), p2, "hidden mask")
        dropout_masks = (m1, m2)
    _, _, h, _, out = _forward(model, x, dropout_masks, rowwise=True)
    return h, out


def loss_xent(s: np.ndarray, y: np.ndarray) -> float:
    """Mean over the batch of the summed binary cross-entropy (natural log)."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.shape != y.shape:
        raise ValueError(f"shape mismatch: scores {s.shape} vs targets {y.shape}")
    if s.ndim == 1:
        s, y = s[None, :], y[None, :]
    s = np.clip(s, CLIP, 1.0 - CLIP)
    per_sample = -(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)).sum(axis=1)
    return float(per_sample.mean())


def loss_mse(t_hat: np.ndarray, t: np.ndarray) -> float:
    t_hat = np.asarray(t_hat, dtype=float)
    t = np.asarray(t, dtype=float)
    if t_hat.shape != t.shape:
        raise ValueError(f"shape mismatch: {t_hat.shape} vs {t.shape}")
    return float(np.mean((t_hat - t) ** 2))


def _targets(model: FnnModel, targets: np.ndarray, n: int) -> np.ndarray:
    t = np.asarray(targets, dtype=float)
    if t.ndim == 1:
        t = t.reshape(n, -1) if t.size == n * model.layout.n_out else t[None, :]
    if t.shape != (n, model.layout.n_out):
        raise ValueError(f"targets have shape {t.shape}, expected ({n}, {model.layout.n_out})")
    return t


def model_loss(model: FnnModel, x, targets, masks=None) -> float:
    x = _as_batch(x, model.layout.n_in)
    t = _targets(model, targets, x.shape[0])
    out = _forward(model, x, masks)[-1]
    return loss_xent(out, t) if model.layout.head == "sigmoid_xent" else loss_mse(out, t)


def _loss_and_grads(model: FnnModel, x, targets, masks=None):
    x = _as_batch(x, model.layout.n_in)
    n = x.shape[0]
    t = _targets(model, targets, n)
    xin, pre, h, hin, out = _forward(model, x, masks)
    if model.layout.head == "sigmoid_xent":
        loss = loss_xent(out, t)
        dz = (out - t) / n
    else:
        loss = loss_mse(out, t)
        dz = 2.0 * (out - t) / out.size
    gw2 = dz.T @ hin
    gb2 = dz.sum(axis=0)
    dh = dz @ model.w2
    if masks is not None:
        dh = dh * masks[1]
    dpre = dh * (pre > 0)
    gw1 = dpre.T @ xin
    gb1 = dpre.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def fnn_gradients(model: FnnModel, x, targets, masks=None) -> dict:
    """Analytic gradients of the head's loss for fixed dropout masks.

    For the sigmoid head the output delta is ``s - y``; this is exact
    wherever scores are inside the clipping band of the loss.
    """
    return _loss_and_grads(model, x, targets, masks)[1]


def adam_step(state: AdamState, model: FnnModel, grads: dict, config: TrainConfig):
    """One bias-corrected Adam update; returns ``(new_state, new_model)``."""
    t = state.step + 1
    b1, b2, lr, eps = config.beta1, config.beta2, config.learning_rate, config.epsilon
    m, v, params = {}, {}, {}
    for k, p in model.params().items():
        g = grads[k]
        m[k] = b1 * state.m[k] + (1.0 - b1) * g
        v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = m[k] / (1.0 - b1**t)
        v_hat = v[k] / (1.0 - b2**t)
        params[k] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(m, v, t), model.with_params(params)


def fnn_train(layout: FnnLayout, x, targets, config: TrainConfig, init: FnnModel | None = None):
    """Mini-batch Adam training with fresh dropout masks per batch.

    Returns ``(model, history)`` where ``history[e]`` is the size-weighted
    mean of the (dropout-perturbed) minibatch losses of epoch ``e``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data is empty")
    n = x.shape[0]
    model = init if init is not None else fnn_init(layout, config.seed)
    if model.layout != layout:
        raise ValueError("initial model layout does not match")
    t = _targets(model, targets, n)
    if layout.head == "sigmoid_xent" and not np.all((t == 0) | (t == 1)):
        raise ValueError("sigmoid_xent head needs 0/1 targets")
    shuffle_rng = substream(config.seed, "shuffle")
    drop_rng = substream(config.seed, "dropout")
    use_dropout = config.retention != (1.0, 1.0)
    state = AdamState.zeros_like(model)
    history = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, tb = x[idx], t[idx]
            masks = dropout_masks(drop_rng, len(idx), layout, config.retention) if use_dropout else None
            loss, grads = _loss_and_grads(model, xb, tb, masks)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start}")
            state, model = adam_step(state, model, grads, config)
            total += loss * len(idx)
        history.append(total / n)
        log.debug("epoch %d loss %.6g", epoch, history[-1])
    return model, history


def predict_scores(model: FnnModel, x) -> np.ndarray:
    """Inference-mode outputs (no dropout).

    Each row is computed independently of the others, so batched and
    row-by-row prediction agree bit for bit.
    """
    x = _as_batch(x, model.layout.n_in)
    return _forward(model, x, None, rowwise=True)[-1]
