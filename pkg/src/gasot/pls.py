"""Partial least squares (NIPALS), PLS-DA and the binary-relevance wrapper."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

TOL = 1e-10
MAX_ITER = 500
STALL = 1e-6


@dataclass(frozen=True, eq=False)
class PlsModel:
    """Fitted PLS2 model.

    ``weights`` (W), ``x_loadings`` (P) and ``y_loadings`` (Q) hold one
    column per component. ``residual_norms[a]`` is the Frobenius norm of
    the X residual after extracting ``a`` components (entry 0 is the
    centred X itself).
    """

    x_mean: np.ndarray
    y_mean: np.ndarray
    weights: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    residual_norms: np.ndarray
    iterations: np.ndarray

    @property
    def k(self) -> int:
        return int(self.weights.shape[1])


@dataclass(frozen=True, eq=False)
class PlsDaModel:
    pls: PlsModel


def nipals_fit(x, y, k: int, tol: float = TOL, max_iter: int = MAX_ITER) -> PlsModel:
    """Extract ``k`` PLS components with the NIPALS algorithm.

    Parameters
    ----------
    x : (n, p) array
    y : (n,) or (n, q) array
    k : number of components, at most ``min(n, p)``
    tol : stop the inner loop when the relative change of the X score
        vector falls below this value, or once the change stalls below
        ``STALL`` (the floating-point floor for late components).
    max_iter : inner-loop iteration cap per component.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ValueError(f"x {x.shape} and y {y.shape} must share their row count")
    n, p = x.shape
    if not 1 <= k <= min(n, p):
        raise ValueError(f"k must be in [1, {min(n, p)}], got {k}")
    x_mean, y_mean = x.mean(axis=0), y.mean(axis=0)
    xr, yr = x - x_mean, y - y_mean
    x_scale = np.linalg.norm(xr)
    if x_scale == 0:
        raise ValueError("x has zero variance")

    W, P, Q = [], [], []
    norms, iters = [x_scale], []
    for a in range(k):
        # start from the Y column with the largest remaining variance
        u = yr[:, np.argmax(np.sum(yr * yr, axis=0))]
        if not np.any(u):
            u = xr[:, np.argmax(np.sum(xr * xr, axis=0))]
        t_old, change_old = None, np.inf
        for it in range(1, max_iter + 1):
            w = xr.T @ u
            wn = np.linalg.norm(w)
            if wn <= 1e-14 * x_scale:
                raise ValueError(f"x residual is exhausted after {a} components; reduce k")
            w /= wn
            t = xr @ w
            tt = t @ t
            q = yr.T @ t / tt
            qq = q @ q
            u = yr @ q / qq if qq > 0 else t
            if t_old is not None:
                change = np.linalg.norm(t - t_old) / np.linalg.norm(t)
                # a change that stops shrinking below STALL is round-off noise
                if change <= tol or (change >= change_old and change < STALL):
                    break
                change_old = change
            t_old = t
        else:
            log.warning("NIPALS component %d did not converge in %d iterations", a + 1, max_iter)
        tt = t @ t
        p_load = xr.T @ t / tt
        q = yr.T @ t / tt
        xr = xr - np.outer(t, p_load)
        yr = yr - np.outer(t, q)
        W.append(w)
        P.append(p_load)
        Q.append(q)
        norms.append(np.linalg.norm(xr))
        iters.append(it)
    return PlsModel(x_mean, y_mean, np.column_stack(W), np.column_stack(P),
                    np.column_stack(Q), np.asarray(norms), np.asarray(iters))


def pls_predict(model: PlsModel, x) -> np.ndarray:
    """Predict Y by replaying the score/deflation sequence on new rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.x_mean.shape[0]:
        raise ValueError(f"expected {model.x_mean.shape[0]} features, got {x.shape[1]}")
    xr = x - model.x_mean
    yhat = np.tile(model.y_mean, (x.shape[0], 1))
    for a in range(model.k):
        t = xr @ model.weights[:, a]
        xr = xr - np.outer(t, model.x_loadings[:, a])
        yhat += np.outer(t, model.y_loadings[:, a])
    return yhat


def dummy_columns(y) -> np.ndarray:
    """Complementary indicators ``[y == 0, y == 1]``."""
    y = np.asarray(y).astype(int).ravel()
    return np.column_stack([(y == 0), (y == 1)]).astype(float)


def plsda_fit(x, y, k: int) -> PlsDaModel:
    y = np.asarray(y).ravel()
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("PLS-DA labels must be 0/1")
    if y.min() == y.max():
        raise ValueError("PLS-DA needs both classes in the training labels")
    return PlsDaModel(nipals_fit(x, dummy_columns(y), k))


def plsda_decide(dummy_scores) -> np.ndarray:
    """Class 1 iff the y=1 dummy scores strictly higher than the y=0 dummy."""
    d = np.atleast_2d(np.asarray(dummy_scores, dtype=float))
    return (d[:, 1] > d[:, 0]).astype(np.int8)


def plsda_predict(model: PlsDaModel, x) -> np.ndarray:
    return plsda_decide(pls_predict(model.pls, x))


def plsbr_fit(x, y, k: int) -> list:
    """One independent PLS-DA model per label column."""
    y = np.asarray(y)
    if y.ndim != 2:
        raise ValueError("label matrix must be 2-D")
    models = []
    for i in range(y.shape[1]):
        col = y[:, i]
        if col.min() == col.max():
            raise ValueError(f"label column {i} has a single class; cannot fit PLS-DA")
        models.append(plsda_fit(x, col, k))
    return models


def plsbr_predict(models, x, n_labels: int | None = None) -> np.ndarray:
    if len(models) == 0:
        raise ValueError("no PLS-DA models given")
    if n_labels is not None and len(models) != n_labels:
        raise ValueError(f"expected {n_labels} PLS-DA models, got {len(models)}")
    return np.column_stack([plsda_predict(m, x) for m in models]).astype(np.int8)
