"""Mean-centred principal component analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def k(self) -> int:
        return int(self.components.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.mean.shape[0])


def _fix_signs(components: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(x: np.ndarray, k: int | None = None) -> PcaModel:
    """Fit the top-``k`` eigenpairs of the sample covariance of ``x``.

    Parameters
    ----------
    x : (n, p) array
    k : number of components, default ``min(n, p)``.

    Eigenvalues use the ``n - 1`` normalisation. Each component is flipped
    so that its largest-magnitude entry is positive.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca_fit needs an (n, p) array with n >= 2")
    n, p = x.shape
    kmax = min(n, p)
    if k is None:
        k = kmax
    if not 1 <= k <= kmax:
        raise ValueError(f"k must be in [1, {kmax}], got {k}")
    mean = x.mean(axis=0)
    xc = x - mean
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    eig = s**2 / (n - 1)
    eig[eig < 0] = 0.0
    total = float(np.sum(xc * xc) / (n - 1))
    comps = _fix_signs(vt[:k])
    model = PcaModel(mean, comps, eig[:k].copy(), total)
    _check_invariants(model)
    return model


def _check_invariants(model: PcaModel) -> None:
    gram = model.components @ model.components.T
    if not np.allclose(gram, np.eye(model.k), atol=1e-8):
        raise ArithmeticError("PCA components lost orthonormality")
    if np.any(np.diff(model.eigenvalues) > 1e-10 * max(1.0, model.eigenvalues[0])):
        raise ArithmeticError("PCA eigenvalues are not sorted")


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {x.shape[1]}")
    return (x - model.mean) @ model.components.T


def explained_variance_curve(model: PcaModel) -> np.ndarray:
    """Cumulative fraction of total variance captured by the first j PCs."""
    if not model.total_variance > 0:
        raise ValueError("total variance is zero; explained variance is undefined")
    curve = np.cumsum(model.eigenvalues) / model.total_variance
    return np.minimum(curve, 1.0)


def n_components_for(model: PcaModel, fraction: float) -> int:
    """Smallest number of PCs whose cumulative explained variance reaches ``fraction``."""
    curve = explained_variance_curve(model)
    hits = np.nonzero(curve >= fraction - 1e-12)[0]
    return int(hits[0]) + 1 if hits.size else model.k + 1
